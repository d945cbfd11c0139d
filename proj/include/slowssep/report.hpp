#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace slowssep {

inline constexpr int kReportSchemaVersion = 1;

/// One CSV line. x is the experiment's abscissa (time, mass, N, ...).
struct CsvRow {
  std::string experiment;
  int N = 0;
  double x = 0;
  double estimate = 0, ci_lo = 0, ci_hi = 0;
  double reference = 0;
  std::uint64_t seed = 0;
};

struct Report {
  std::string experiment;
  nlohmann::json config;   ///< the exact run configuration
  nlohmann::json summary;  ///< experiment-specific scalars
  std::vector<CsvRow> rows;
  std::vector<std::string> warnings;
};

/// Fixed column layout:
///   experiment,N,x,estimate,ci_lo,ci_hi,reference,rel_err,seed
/// preceded by "# config: <json>" and "# version: <v>" comment lines.
std::string to_csv(const Report& r);

/// {"schema_version", "version", "experiment", "config", "summary", "warnings", "rows"}.
nlohmann::json to_json(const Report& r);

/// Writes <out_dir>/<experiment>.csv and/or .json; creates out_dir if needed.
void write_report(const Report& r, const std::filesystem::path& out_dir, bool csv, bool json);

/// JSON value for a double; inf and nan become strings.
nlohmann::json json_number(double v);

/// Number formatting shared by CSV and console output (%.12g; inf/nan spelled out).
std::string format_number(double v);

}  // namespace slowssep
