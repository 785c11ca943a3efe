#include "torqflow/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "torqflow/errors.hpp"

namespace torqflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, const std::string& path) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ValidationError(path + ": malformed numeric field '" + s + "'");
    return v;
}

} // namespace

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw ArgumentError(path + ": row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_g17(row[i]);
        }
        out << '\n';
    }
    if (!out) throw ValidationError("short write to " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    table.header = split_fields(line);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != table.header.size())
            throw ValidationError(path + ": row width does not match header");
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i)
            row[i] = parse_double(fields[i], path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_profile_csv(const std::string& path, const SupportProfile& p) {
    std::vector<std::vector<double>> rows(p.size());
    for (int i = 0; i < p.size(); ++i) rows[i] = {p.theta(i), p[i]};
    write_csv(path, {"theta", "h"}, rows);
}

SupportProfile read_profile_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    int col_theta = -1;
    int col_h = -1;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "theta") col_theta = static_cast<int>(i);
        if (table.header[i] == "h") col_h = static_cast<int>(i);
    }
    if (col_theta < 0 || col_h < 0)
        throw ValidationError(path + ": expected columns theta,h");
    const int n = static_cast<int>(table.rows.size());
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) {
        const double expect = 2.0 * std::numbers::pi * i / n;
        if (std::abs(table.rows[i][col_theta] - expect) > 1e-9)
            throw ValidationError(path + ": theta column is not the uniform grid at row " +
                                  std::to_string(i));
        h[i] = table.rows[i][col_h];
    }
    return SupportProfile(std::move(h));
}

} // namespace torqflow
