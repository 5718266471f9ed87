#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "biphoton/cli/config.hpp"
#include "biphoton/cli/scan_io.hpp"

namespace biphoton::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<OutputFormat> format;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Everything one experiment produces before analysis.
struct ScanSet {
  std::vector<ScanResult> scans;      // one, or one per field
  std::vector<double> fields_tesla;   // field scans only
  std::optional<ScanResult> calibration;
  std::optional<ChannelCounts> hwp45;
};

struct RunReport {
  nlohmann::json summary;
  std::string fit_report;
  std::vector<std::string> files;
  std::vector<std::string> failures;  // per-fit or per-check problems; empty on success

  int exit_code() const { return failures.empty() ? kExitOk : kExitRuntime; }
};

void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts);

ScanSet simulate_scans(const ExperimentConfig& cfg);

/// Runs every requested analysis. Fit failures are recorded, not thrown.
RunReport analyze(const ExperimentConfig& cfg, const ScanSet& data);

/// Writes scan data, the fit report and summary.json; appends the paths to report.files.
/// Throws std::runtime_error naming the path on I/O failure.
void write_outputs(const ExperimentConfig& cfg, const ScanSet& data, RunReport& report);

/// simulate_scans + analyze + write_outputs.
RunReport run(ExperimentConfig cfg, const RunOptions& opts);

/// Loads scans written by a previous run. Field scans need one file per field
/// (with a '# field' line) and the calibration file when a Verdet fit is requested.
ScanSet load_scans(const ExperimentConfig& cfg, const std::vector<std::string>& data_paths,
                   const std::optional<std::string>& calibration_path);

/// Bundled reproduction configs, keyed fig2 ... fig6.
std::vector<std::string> bundled_ids();
std::optional<std::string_view> bundled_config(std::string_view id);

}  // namespace biphoton::cli
