#pragma once

#include "fracpm/diagnostics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fracpm {

/// %.17g with stable "inf"/"nan" spellings; round-trips doubles exactly.
std::string csv_number(double v);

struct CsvOptions {
  std::uint64_t config_hash = 0;
  bool timestamp = true;
};

/// Writes `# config <hash>`, an optional `# generated <time>` line, the
/// header row, then the data rows.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows, const CsvOptions& options);

/// Rows in the shared check schema: check,quantity,tau_or_t_or_k,value,bound,pass.
std::vector<std::string> check_csv_rows(const CheckReport& report);

inline const char* kCheckHeader = "check,quantity,tau_or_t_or_k,value,bound,pass";

}  // namespace fracpm
