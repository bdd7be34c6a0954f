// csv.hpp: SweepResult table and its CSV form.
//
// Numbers are written as the shortest decimal that parses back to the same
// double (std::to_chars), so parse(emit(x)) == x bit for bit.

#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace qnd {

class IoError : public std::runtime_error {
public:
    IoError(const std::string& what, std::string path)
        : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Rectangular table: the leading column(s) hold the grid, the rest observables.
struct SweepResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    const std::string& parameter() const { return columns.at(0); }

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size()) {
            throw std::invalid_argument("SweepResult: row has " + std::to_string(row.size()) +
                                        " values, expected " + std::to_string(columns.size()));
        }
        rows.push_back(std::move(row));
    }

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw std::out_of_range("SweepResult: no column " + std::string(name));
    }

    bool operator==(const SweepResult&) const = default;
};

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline double parse_number(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;  // from_chars rejects a leading '+'
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || first == last) {
        throw std::invalid_argument("malformed number '" + std::string(s) + "'");
    }
    return v;
}

namespace detail {
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw std::invalid_argument("unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}
}  // namespace detail

inline std::string to_csv(const SweepResult& r) {
    std::string out;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (i) out += ',';
        out += detail::csv_field(r.columns[i]);
    }
    out += '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline SweepResult parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
    SweepResult r;
    r.columns = detail::split_record(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_record(line);
        std::vector<double> row;
        row.reserve(fields.size());
        try {
            for (const auto& f : fields) row.push_back(parse_number(f));
            r.add_row(std::move(row));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return r;
}

inline void emit_csv(const SweepResult& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing", path);
    const std::string text = to_csv(r);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw IoError("write failed", path);
}

}  // namespace qnd
