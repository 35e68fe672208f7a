#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

#include "fgl/errors.hpp"

namespace fgl {

/// Locale-independent decimal formatting with 17 significant digits, enough
/// to reproduce any double exactly on read-back.
inline std::string format_full(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                   std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Shortest representation that round-trips; used where humans read the file.
inline std::string format_short(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

/// Line-buffered CSV writer. Values are pre-formatted strings; empty strings
/// produce empty cells.
class CsvFile {
public:
    explicit CsvFile(const std::string& path) : path_(path), out_(path) {
        if (!out_) {
            throw io_error("cannot open " + path + " for writing");
        }
    }

    void row(std::span<const std::string> cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                out_ << ',';
            }
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) {
            throw io_error("write failed on " + path_);
        }
    }

    void row(std::initializer_list<std::string> cells) {
        row(std::span<const std::string>(cells.begin(), cells.size()));
    }

    void flush() {
        out_.flush();
        if (!out_) {
            throw io_error("flush failed on " + path_);
        }
    }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace fgl
