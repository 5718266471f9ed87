#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "biphoton/analysis.hpp"
#include "biphoton/experiment.hpp"

namespace biphoton::cli {

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { syntax, schema, range };

  ConfigError(Kind kind, std::string message, int line = -1, int column = -1);

  Kind kind() const { return kind_; }
  /// 1-based; -1 when the problem is not tied to a position.
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

std::string_view to_string(ConfigError::Kind kind);

enum class Quantity { length_um, time_s, angle_deg, field_tesla, rate_hz, verdet, dimensionless };

/// Parses "59um", "5 ns", "45deg", "0.1T", "1e4/s". A bare number is taken in
/// the canonical unit of `q` (um, s, deg, T, 1/s, rad/(T m)). Throws std::invalid_argument.
double parse_quantity(std::string_view text, Quantity q);

enum class ScanType { delay, hwp, field };
std::string_view to_string(ScanType t);

struct ScanSpec {
  ScanType type = ScanType::delay;
  std::vector<double> settings;    // um, deg or T depending on type
  double at_delay_um = 0.0;        // hwp scans
  std::vector<double> delays_um;   // field scans
  std::optional<FaradaySample> sample;
  std::vector<double> calibration_angles_deg;  // field scans: known-rotation calibration
};

struct VerdetSpec {
  Channel channel = Channel::VcHd;
  int sign = 1;
  bool fit_intercept = false;
  std::optional<double> expect;
  double tolerance = 0.0;
};

struct BellSpec {
  double hwp_delay_um = 0.0;
  bool subtract_accidentals = true;
  /// Measured counts at HWP 45 deg for `fit` runs; simulated when absent.
  std::optional<ChannelCounts> hwp45_counts;
};

struct AnalysisSpec {
  std::vector<Channel> gaussian;
  std::optional<Channel> visibility;
  std::optional<Channel> coherence;
  std::optional<BellSpec> bell_fractions;
  std::vector<Channel> sin2;
  std::optional<VerdetSpec> verdet;
};

enum class OutputFormat { csv, json };

struct OutputSpec {
  std::string dir = "out";
  std::string name = "scan";
  OutputFormat format = OutputFormat::csv;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  Apparatus apparatus;
  ScanSpec scan;
  AnalysisSpec analysis;
  OutputSpec output;
};

/// Validates everything before returning. Diagnostics name the key and line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace biphoton::cli
