#include "slowssep/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slowssep {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

double rel_err(const CsvRow& row) {
  if (row.reference == 0) return std::abs(row.estimate) == 0 ? 0.0 : std::nan("");
  return std::abs(row.estimate - row.reference) / std::abs(row.reference);
}

}  // namespace

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "# config: " << r.config.dump() << "\n";
  os << "# version: " << SLOWSSEP_VERSION << "\n";
  for (const auto& w : r.warnings) os << "# warning: " << w << "\n";
  os << "experiment,N,x,estimate,ci_lo,ci_hi,reference,rel_err,seed\n";
  for (const auto& row : r.rows) {
    os << row.experiment << ',' << row.N << ',' << format_number(row.x) << ',' << format_number(row.estimate) << ','
       << format_number(row.ci_lo) << ',' << format_number(row.ci_hi) << ',' << format_number(row.reference) << ','
       << format_number(rel_err(row)) << ',' << row.seed << "\n";
  }
  return os.str();
}

nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["version"] = SLOWSSEP_VERSION;
  j["experiment"] = r.experiment;
  j["config"] = r.config;
  j["summary"] = r.summary;
  j["warnings"] = r.warnings;
  auto rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"N", row.N},
                    {"x", json_number(row.x)},
                    {"estimate", json_number(row.estimate)},
                    {"ci_lo", json_number(row.ci_lo)},
                    {"ci_hi", json_number(row.ci_hi)},
                    {"reference", json_number(row.reference)},
                    {"rel_err", json_number(rel_err(row))},
                    {"seed", row.seed}});
  j["rows"] = rows;
  return j;
}

void write_report(const Report& r, const std::filesystem::path& out_dir, bool csv, bool json) {
  std::filesystem::create_directories(out_dir);
  if (csv) {
    std::ofstream f(out_dir / (r.experiment + ".csv"));
    if (!f) throw std::runtime_error("cannot write " + (out_dir / (r.experiment + ".csv")).string());
    f << to_csv(r);
  }
  if (json) {
    std::ofstream f(out_dir / (r.experiment + ".json"));
    if (!f) throw std::runtime_error("cannot write " + (out_dir / (r.experiment + ".json")).string());
    f << to_json(r).dump(2) << "\n";
  }
}

}  // namespace slowssep
