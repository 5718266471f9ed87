#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "biphoton/interference.hpp"

namespace biphoton {

/// Acquisition parameters for one measurement point. Per-detector arrays are indexed by Detector.
struct AcquisitionConfig {
  double pair_rate = 0.0;  // pairs/s reaching the beamsplitter
  double duration = 1.0;   // s
  std::array<double, 4> efficiency{1.0, 1.0, 1.0, 1.0};
  std::array<double, 4> dark_rate{};  // counts/s
  double coincidence_window = 5e-9;   // s
  double jitter = 1e-10;              // s, rms per photon
  bool model_accidentals = true;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct ChannelCounts {
  std::array<std::int64_t, 6> coincidences{};
  std::array<std::int64_t, 4> singles{};

  std::int64_t operator[](Channel ch) const { return coincidences[static_cast<std::size_t>(ch)]; }
  std::int64_t singles_at(Detector d) const { return singles[static_cast<std::size_t>(d)]; }

  friend bool operator==(const ChannelCounts&, const ChannelCounts&) = default;
};

/// Expected (mean) counts for a single acquisition.
struct ChannelMeans {
  std::array<double, 6> coincidences{};
  std::array<double, 6> true_coincidences{};
  std::array<double, 6> accidentals{};
  std::array<double, 4> singles{};

  double operator[](Channel ch) const { return coincidences[static_cast<std::size_t>(ch)]; }
};

/// 2 · window · r1 · r2
double accidental_rate(double r1, double r2, double window);

/// Singles rate per detector: detected pair photons plus dark counts. A bunched
/// pair on one detector clicks it once.
std::array<double, 4> singles_rates(const ChannelProbabilities& probs, const AcquisitionConfig& cfg);

ChannelMeans expected_counts(const ChannelProbabilities& probs, const AcquisitionConfig& cfg);

/// Poisson draw of every channel and singles count around expected_counts().
/// Deterministic in cfg.rng_seed.
ChannelCounts sample_counts(const ChannelProbabilities& probs, const AcquisitionConfig& cfg);

struct TimestampStream {
  Detector detector = Detector::Hc;
  std::vector<double> times;  // s, strictly increasing
};

using TimestampStreams = std::array<TimestampStream, 4>;  // indexed by Detector

/// Event-level emulation of one acquisition: pairs at Poisson arrival times
/// routed by `probs`, per-photon efficiency and jitter, independent dark counts.
TimestampStreams generate_timestamps(const ChannelProbabilities& probs, const AcquisitionConfig& cfg);

/// Coincidence counting per detector pair with a two-pointer sweep. Events are
/// matched in time order; each timestamp joins at most one coincidence per
/// channel. Throws std::invalid_argument for streams that are not strictly increasing.
ChannelCounts count_coincidences(const TimestampStreams& streams, double window);

/// "detector_id<TAB>time_seconds" per line, merged across detectors in time order.
void write_timestamps(std::ostream& out, const TimestampStreams& streams);
/// Reads the format of write_timestamps. Blank lines and '#' comments are skipped.
TimestampStreams read_timestamps(std::istream& in);

}  // namespace biphoton
