// Minimal CSV reading/writing with RFC-style quoting and shortest
// round-trip numeric formatting, so written trees reload loss-free.
#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "affectbench/core.hpp"

namespace afb {

// Shortest decimal text that parses back to exactly the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw validation_error(context + ": cannot parse number '" + s + "'");
    return v;
}

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_escape(fields[i]);
    }
    return line;
}

// Parses full CSV text (handles quoted fields spanning commas).
inline std::vector<std::vector<std::string>> csv_parse(const std::string& text,
                                                       const std::string& context) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            row_started = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
            row_started = true;
        } else if (c == '\n') {
            if (row_started || !field.empty()) {
                row.push_back(field);
                rows.push_back(row);
            }
            field.clear();
            row.clear();
            row_started = false;
        } else if (c != '\r') {
            field += c;
            row_started = true;
        }
    }
    if (in_quotes) throw validation_error(context + ": unterminated quoted field");
    if (row_started || !field.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw structural_error("missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw structural_error("cannot write file: " + path);
    out << content;
    if (!out) throw structural_error("write failed: " + path);
}

}  // namespace afb
