#pragma once

#include <string>
#include <vector>

#include "torqflow/geometry.hpp"

namespace torqflow {

// 17 significant digits, enough to round-trip any double exactly.
std::string format_g17(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Writers emit LF line endings and 17 significant digit numbers regardless of
// platform; readers accept trailing CR.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
CsvTable read_csv(const std::string& path);

// Profile files carry columns theta,h with theta ascending from 0.
void write_profile_csv(const std::string& path, const SupportProfile& p);
SupportProfile read_profile_csv(const std::string& path);

} // namespace torqflow
