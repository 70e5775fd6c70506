#pragma once

// Config parsing, checker registry and report emission for the w2lab CLI.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "w2lab/experiments.hpp"
#include "w2lab/verdict.hpp"

namespace w2lab {

struct SamplerSettings {
  std::string kind = "rademacher_product";
  std::size_t dim = 1;
  /// per-coordinate scale for rademacher_product, beta otherwise
  double scale = 1.0;

  BoundedSampler build() const;
};

/// Everything a run can be configured with. Defaults reproduce the full suite.
struct RunSettings {
  // [sampler]: the main rate experiment
  SamplerSettings sampler;

  // [grid]
  std::uint64_t n_min = 16;
  std::uint64_t n_max = 4096;
  std::size_t replicas = 10;
  std::size_t m = 100000;

  // [estimator]
  std::string estimator = "quantile-1d";
  std::size_t halfspace_directions = 8;
  std::size_t projection_directions = 16;
  double sinkhorn_epsilon_fraction = 0.01;

  // [rate2d]: the exact-OT rate run
  SamplerSettings rate2d_sampler{"scaled_basis", 2, 1.4142135623730951};
  std::string rate2d_estimator = "exact";
  std::size_t rate2d_m = 3000;
  std::size_t rate2d_replicas = 3;

  // [lower]
  std::size_t lower_proxy_m = 1000000;
  std::size_t lower_m = 100000;
  std::size_t lower_replicas = 3;
  /// grid point with the empirical W2 run; 0 means the largest grid point
  std::uint64_t lower_empirical_n = 0;

  // [tolerance]
  double tol_exact = 1e-12;
  double tol_identity = 1e-6;
  double tol_closed_form = 1e-8;
  double tol_ot = 1e-9;
  double tol_talagrand_equality = 1e-6;
  double se_slack = 5.0;
  double slope_min = -0.65;
  double slope_max = -0.35;
  double increment_margin = 0.5;
  double lower_band_lo = 0.24;
  double lower_band_hi = 0.26;
  double plateau_fraction = 0.95;

  /// Canonical key=value listing of every setting, one per line, in a fixed order.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
};

/// Parses the INI-style config. Blocks: [sampler] (required), [grid],
/// [estimator], [rate2d], [lower], [tolerance]. '#' and ';' start comments.
/// Throws ConfigError naming the line and key on any problem, and checks
/// estimator/dimension compatibility before returning.
RunSettings parse_config(const std::string& text, const std::string& source = "<config>");
RunSettings load_config(const std::filesystem::path& path);
/// Estimator/dimension and value-range checks; ConfigError on failure.
void validate_settings(const RunSettings& s);

struct CheckerInfo {
  std::string id;
  std::string anchor;  // the result being checked
  std::string suite;   // check | rate | lower | ci
};

const std::vector<CheckerInfo>& checker_registry();

struct Table {
  std::string name;  // file stem under tables/
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct PlotData {
  std::string name;  // file stem under plotdata/
  std::string x_label;
  std::string y_label;
  std::vector<std::pair<double, double>> points;
};

struct CheckerOutput {
  std::string id;
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  std::vector<PlotData> plots;
  /// wall time of the checker itself (not written to any artifact)
  double seconds = 0.0;
};

struct RunOptions {
  std::string subcommand = "all";  // check | rate | lower | ci | all
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 20240607;
  std::size_t workers = 1;
  std::filesystem::path out = "w2lab-out";
  std::vector<std::string> only;
  bool verbose = false;
};

struct RunSummary {
  std::vector<CheckerOutput> outputs;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t inconclusive = 0;
  int exit_code() const { return failed == 0 ? 0 : 1; }
};

/// Checker ids selected by a subcommand and --only filter (ConfigError on unknown ids).
std::vector<std::string> select_checkers(const std::string& subcommand, const std::vector<std::string>& only);

/// Runs the selected checkers. Progress goes to `log` when verbose.
RunSummary execute(const RunSettings& settings, const RunOptions& options, std::ostream& log);

/// Writes verdicts.json, tables/*.csv and plotdata/*.dat into options.out via
/// a sibling ".partial" directory that is renamed into place.
void write_artifacts(const RunSummary& summary, const RunSettings& settings, const RunOptions& options);

/// Full pipeline: load config, execute, write. Returns 0 (no failures), 1
/// (some verdict failed) or 2 (usage/config error).
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// Printable registry listing, one checker per line.
std::string list_checks();

}  // namespace w2lab
