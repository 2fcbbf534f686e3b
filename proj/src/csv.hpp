#pragma once

// Minimal comma-separated text helpers shared by the readers and writers.

#include "batterypool/error.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bpool::csv {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

/// Line reader that tracks 1-based line numbers and strips CR.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
        if (!in_) throw Error("cannot open " + path_);
    }

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!trim(line).empty()) return true;
        }
        return false;
    }

    void expect_header(std::string_view header) {
        std::string line;
        if (!next(line)) throw ParseError(path_, line_no_, "missing header");
        if (trim(line) != header) {
            throw ParseError(path_, line_no_, "expected header '" + std::string(header) + "'");
        }
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

    double number(std::string_view field) const {
        field = trim(field);
        if (!field.empty() && field.front() == '+') field.remove_prefix(1);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
            fail("malformed number '" + std::string(field) + "'");
        }
        return value;
    }

    long integer(std::string_view field) const {
        field = trim(field);
        long value = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            fail("malformed integer '" + std::string(field) + "'");
        }
        return value;
    }

    std::size_t line_no() const noexcept { return line_no_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

/// Shortest representation that parses back to the same double.
inline void append_number(std::string& out, double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    out.append(buf, ptr);
}

inline std::string number(double value) {
    std::string s;
    append_number(s, value);
    return s;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

}  // namespace bpool::csv
