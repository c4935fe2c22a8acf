#include "fracpm/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fracpm {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows, const CsvOptions& options) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(options.config_hash));
  out << "# config " << hash_buf << "\n";
  if (options.timestamp) {
    std::time_t now = std::time(nullptr);
    char time_buf[64];
    std::strftime(time_buf, sizeof time_buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "# generated " << time_buf << "\n";
  }
  out << header << "\n";
  for (const auto& row : rows) out << row << "\n";
}

std::vector<std::string> check_csv_rows(const CheckReport& report) {
  std::vector<std::string> rows;
  rows.reserve(report.rows.size());
  for (const auto& r : report.rows)
    rows.push_back(report.check + "," + r.quantity + "," + csv_number(r.key) + "," +
                   csv_number(r.value) + "," + csv_number(r.bound) + "," +
                   (r.pass ? "true" : "false"));
  return rows;
}

}  // namespace fracpm
