#include "nvpol/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nvpol {

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_csv(const std::filesystem::path& path,
               const std::vector<CsvColumn>& columns) {
  if (columns.empty()) throw std::invalid_argument("write_csv: no columns");
  const size_t rows = columns.front().values.size();
  for (const auto& c : columns)
    if (c.values.size() != rows)
      throw std::invalid_argument("write_csv: ragged columns");
  std::string body;
  body.reserve(rows * columns.size() * 20 + 256);
  for (size_t c = 0; c < columns.size(); ++c) {
    body += columns[c].header;
    body += (c + 1 < columns.size()) ? ',' : '\n';
  }
  char buf[40];
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.12g", columns[c].values[r]);
      body += buf;
      body += (c + 1 < columns.size()) ? ',' : '\n';
    }
  }
  write_text_atomic(path, body);
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace nvpol
