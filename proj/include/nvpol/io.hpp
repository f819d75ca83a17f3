#pragma once

// Deterministic artifact emission: CSV tables with unit-bearing headers and
// JSON sidecars, written atomically (temp file + rename).

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nvpol {

struct CsvColumn {
  std::string header;  // includes units, e.g. "B_mT"
  std::vector<double> values;
};

// Comma separators, '.' decimal, LF endings, %.12g values.
void write_csv(const std::filesystem::path& path,
               const std::vector<CsvColumn>& columns);

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::vector<double> to_std(const Eigen::VectorXd& v);

}  // namespace nvpol
