#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rjdcov {

struct CsvTable {
    std::vector<std::string> header;  // empty when the file has no header row
    Eigen::MatrixXd values;
};

/// Reads a numeric CSV (RFC-4180 subset: comma-separated, optional quoting,
/// '.' decimal, UTF-8). A non-numeric first row is treated as the header.
/// Parse errors report the 1-based line and column.
CsvTable read_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& values);

/// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace rjdcov
