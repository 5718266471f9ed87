#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "biphoton/analysis.hpp"
#include "biphoton/experiment.hpp"

namespace biphoton::cli {

/// Column header of scan CSV files.
std::string csv_header();

/// Writes '#'-prefixed metadata lines (variable, units, seed, extras), the header
/// and one row per setting. Settings use 17 significant digits.
void write_scan_csv(std::ostream& out, const ScanResult& scan,
                    const std::map<std::string, std::string>& metadata = {});

struct ScanFile {
  ScanResult scan;  // apparatus left default
  std::map<std::string, std::string> metadata;
};

/// Inverse of write_scan_csv. Throws std::runtime_error naming the line on malformed input.
ScanFile read_scan_csv(std::istream& in);

nlohmann::json to_json(const ChannelCounts& counts);
nlohmann::json to_json(const ScanResult& scan, const std::map<std::string, std::string>& metadata = {});
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const BellFractionEstimate& est);

/// Aligned text table of channel counts, one channel per line, then singles.
std::string counts_table(const ChannelCounts& counts);

}  // namespace biphoton::cli
