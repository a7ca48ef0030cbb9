#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xclust/models.hpp"

namespace xclust::cli {

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> ids{"tail",        "aprime",   "ac",      "clusters",
                                            "theta",       "lpareto",  "independence",
                                            "laplace",     "spectral", "extremal", "m1demo"};
  return ids;
}

struct ExperimentConfig {
  ModelSpec model;
  std::vector<std::size_t> n_grid;
  double block_exponent = 0.5;
  double threshold = 1.0;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  std::filesystem::path output = "xclust-out";
  std::vector<std::string> checks;

  /// Throws ConfigError on an empty or unknown check list, an empty or
  /// unsorted n-grid, or zero replications; model errors surface as well.
  void validate() const;
};

/// Parses the JSON configuration text; errors become ConfigError.
ExperimentConfig parse_config(const std::string& text);

/// Reads and parses a file; unreadable paths raise IoError naming the path.
ExperimentConfig load_config(const std::filesystem::path& path);

/// One line of report.jsonl. `reference` is absent when no reference value
/// exists; verdicts are "pass", "fail", "info" or "insufficient".
struct ReportRecord {
  std::string check;
  std::size_t n = 0;
  std::string quantity;
  double value = 0.0;
  double std_error = 0.0;
  std::optional<double> reference;
  std::string provenance;
  std::string verdict;

  bool failed() const { return verdict == "fail" || verdict == "insufficient"; }
};

std::string to_json_line(const ReportRecord& r);

/// Runs every configured check over the n-grid and returns the ordered records.
std::vector<ReportRecord> run_checks(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Writes report.jsonl and one <check>.csv per check into dir.
void write_reports(const std::filesystem::path& dir, const std::vector<ReportRecord>& records);

/// run_checks + write_reports; returns 0 when no record failed, 1 otherwise.
int run(const ExperimentConfig& config, std::ostream* log = nullptr);

struct RemarkRow {
  std::size_t n = 0;
  double m1 = 0.0;
  double j1 = 0.0;
  double uniform = 0.0;
  double tolerance = 0.0;
};

/// M1, J1 and uniform distances between T+(m_n) and T+(m) for
/// m_n = delta_(1/2 - 1/n, 1/2) + delta_(1/2, 1), m = delta_(1/2, 1), n = 4..1024.
std::vector<RemarkRow> demo_remark();

/// Records for the demo table with per-row verdicts (J1 >= 0.24 everywhere,
/// M1 < 0.01 at the finest n, M1 not larger at the finest n than at the coarsest).
std::vector<ReportRecord> remark_records(const std::vector<RemarkRow>& rows);

/// Entry point for the xclust tool. Exit codes: 0 success, 1 a check failed,
/// 2 usage, configuration or I/O error.
int main_entry(int argc, char** argv);

}  // namespace xclust::cli
