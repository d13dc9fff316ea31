#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "kscal/data.hpp"
#include "kscal/errors.hpp"

namespace kscal {

/// Shortest round-trip decimal representation of a double. Used everywhere a
/// number is written to a report, so identical values always print as
/// identical bytes.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// FNV-1a content hash, used to key cache files.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
    return std::string(buf, res.ptr);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Reads a numeric CSV with one observation per row. A single non-numeric
/// first row is treated as a header and skipped. Errors name the offending
/// 1-based row.
inline DataMatrix read_data_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<double> values;
    std::size_t dim = 0;
    std::size_t row_number = 0;
    std::size_t data_rows = 0;
    bool header_skipped = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (eol == std::string::npos ? text.size() : eol) - pos);
        pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
        ++row_number;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (!detail::parse_double(fields[i], row[i])) {
                numeric = false;
                break;
            }
        if (!numeric) {
            if (data_rows == 0 && !header_skipped) {
                header_skipped = true;  // single header row allowed
                continue;
            }
            throw IoError(path + ": row " + std::to_string(row_number) +
                          " has a non-numeric field");
        }
        if (dim == 0)
            dim = row.size();
        else if (row.size() != dim)
            throw IoError(path + ": row " + std::to_string(row_number) + " has " +
                          std::to_string(row.size()) + " columns, expected " +
                          std::to_string(dim));
        values.insert(values.end(), row.begin(), row.end());
        ++data_rows;
    }
    if (data_rows == 0) throw IoError(path + ": no data rows");
    return DataMatrix(std::move(values), dim);
}

inline void write_data_csv(const std::string& path, const DataMatrix& data) {
    std::string out;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t k = 0; k < data.dim; ++k) {
            if (k > 0) out += ',';
            out += format_double(data.row(i)[k]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

/// Minimal CSV writer for report tables: caller supplies preformatted cells.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw IoError(path + ": row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace kscal
