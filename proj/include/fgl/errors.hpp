#pragma once

#include <stdexcept>
#include <string>

namespace fgl {

/// Invalid or inconsistent run configuration (bad key, bad value, failed
/// cross-field check). Maps to CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at run time: singular systems, divergent iterations,
/// solution blow-up. Maps to CLI exit code 3.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / output failure. Maps to CLI exit code 4.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fgl
