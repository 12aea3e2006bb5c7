#pragma once

// Text formats: value files, custom weight files and CSV tables with a
// '#'-prefixed metadata block. Numbers are written with 17 significant
// digits and parsed with from_chars, so output is locale-independent and
// round-trips bit-exactly.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "gevtail/errors.hpp"

namespace gevtail::io {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Parses a whole token as a double; nullopt-like failure reported via bool.
inline bool try_parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline double parse_double(std::string_view s, const std::string& context = "value") {
    double v = 0.0;
    if (!try_parse_double(s, v)) throw input_error("cannot parse " + context + " '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& context = "integer") {
    s = trim(s);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw input_error("cannot parse " + context + " '" + std::string(s) + "'");
    }
    return v;
}

/// One real per line; blank lines and '#' comments are ignored.
inline std::vector<double> read_values(std::istream& in) {
    std::vector<double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = trim(v);
        if (v.empty()) continue;
        out.push_back(parse_double(v, "value on line " + std::to_string(lineno)));
    }
    return out;
}

/// Lines "i,j,weight" (commas or whitespace); '#' comments allowed.
inline std::map<std::pair<int, int>, double> read_custom_weights(std::istream& in) {
    std::map<std::pair<int, int>, double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        for (char& c : line) {
            if (c == ',' || c == '\t' || c == ';') c = ' ';
        }
        std::istringstream fields(line);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok.size() == 3 && tok[0] == "i") continue; // header
        if (tok.size() != 3) throw input_error("weights line " + std::to_string(lineno) + ": expected i, j, weight");
        const auto ctx = "weights line " + std::to_string(lineno);
        out[{static_cast<int>(parse_int(tok[0], ctx)), static_cast<int>(parse_int(tok[1], ctx))}] =
            parse_double(tok[2], ctx);
    }
    return out;
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

using Cell = std::variant<double, long long, std::string>;

inline std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

/// Column-named table of numbers and strings.
class Table {
public:
    Table() = default;
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    Table& add_row(std::vector<Cell> row) {
        if (row.size() != columns_.size()) throw config_error("Table: row width does not match header");
        rows_.push_back(std::move(row));
        return *this;
    }

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

    void write_csv(std::ostream& out, const Metadata& meta = {}) const {
        for (const auto& [k, v] : meta) out << "# " << k << ": " << v << '\n';
        for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << columns_[c];
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
            out << '\n';
        }
    }

    /// Inverse of write_csv: numeric-looking fields become doubles (or
    /// integers when written without a decimal point or exponent).
    static Table read_csv(std::istream& in, Metadata* meta = nullptr) {
        Table t;
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line.front() == '#') {
                if (meta) {
                    const std::string_view body = trim(std::string_view(line).substr(1));
                    const auto colon = body.find(": ");
                    if (colon != std::string_view::npos) {
                        meta->emplace_back(std::string(body.substr(0, colon)), std::string(body.substr(colon + 2)));
                    }
                }
                continue;
            }
            std::vector<std::string> fields;
            std::string_view rest = line;
            for (;;) {
                const auto comma = rest.find(',');
                fields.emplace_back(rest.substr(0, comma));
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            if (!header) {
                t.columns_ = std::move(fields);
                header = true;
                continue;
            }
            std::vector<Cell> row;
            for (const auto& f : fields) {
                double d = 0.0;
                const bool integral = f.find_first_of(".eEn") == std::string::npos;
                if (integral && !f.empty()) {
                    long long iv = 0;
                    const auto res = std::from_chars(f.data(), f.data() + f.size(), iv);
                    if (res.ec == std::errc{} && res.ptr == f.data() + f.size()) {
                        row.emplace_back(iv);
                        continue;
                    }
                }
                if (try_parse_double(f, d)) {
                    row.emplace_back(d);
                } else {
                    row.emplace_back(f);
                }
            }
            t.add_row(std::move(row));
        }
        return t;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace gevtail::io
