#include "biphoton/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace biphoton {

namespace {

std::int64_t poisson(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

std::size_t idx(Detector d) { return static_cast<std::size_t>(d); }

void check_strictly_increasing(const TimestampStream& s) {
  for (std::size_t k = 1; k < s.times.size(); ++k) {
    if (!(s.times[k] > s.times[k - 1])) {
      throw std::invalid_argument("timestamp stream " + std::string(to_string(s.detector)) +
                                  " is not strictly increasing at event " + std::to_string(k));
    }
  }
}

std::int64_t sweep(const std::vector<double>& x, const std::vector<double>& y, double window) {
  std::int64_t matched = 0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] < y[j] - window) {
      ++i;
    } else if (y[j] < x[i] - window) {
      ++j;
    } else {
      ++matched;
      ++i;
      ++j;
    }
  }
  return matched;
}

}  // namespace

void AcquisitionConfig::validate() const {
  if (!(pair_rate >= 0.0)) throw std::invalid_argument("pair_rate must be >= 0");
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be >= 0");
  if (!(coincidence_window > 0.0)) throw std::invalid_argument("coincidence window must be > 0");
  if (!(jitter >= 0.0)) throw std::invalid_argument("jitter must be >= 0");
  for (double e : efficiency) {
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("detector efficiency must lie in [0, 1]");
  }
  for (double r : dark_rate) {
    if (!(r >= 0.0)) throw std::invalid_argument("dark rate must be >= 0");
  }
}

double accidental_rate(double r1, double r2, double window) { return 2.0 * window * r1 * r2; }

std::array<double, 4> singles_rates(const ChannelProbabilities& probs, const AcquisitionConfig& cfg) {
  std::array<double, 4> rates{};
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    rates[idx(d1)] += cfg.pair_rate * probs[ch] * cfg.efficiency[idx(d1)];
    rates[idx(d2)] += cfg.pair_rate * probs[ch] * cfg.efficiency[idx(d2)];
  }
  for (Detector d : kDetectors) {
    const double miss = 1.0 - cfg.efficiency[idx(d)];
    rates[idx(d)] += cfg.pair_rate * probs.bunched_at(d) * (1.0 - miss * miss);
    rates[idx(d)] += cfg.dark_rate[idx(d)];
  }
  return rates;
}

ChannelMeans expected_counts(const ChannelProbabilities& probs, const AcquisitionConfig& cfg) {
  ChannelMeans m;
  const auto rates = singles_rates(probs, cfg);
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    const auto c = static_cast<std::size_t>(ch);
    m.true_coincidences[c] = cfg.pair_rate * cfg.duration * probs[ch] * cfg.efficiency[idx(d1)] * cfg.efficiency[idx(d2)];
    m.accidentals[c] =
        cfg.model_accidentals ? accidental_rate(rates[idx(d1)], rates[idx(d2)], cfg.coincidence_window) * cfg.duration
                              : 0.0;
    m.coincidences[c] = m.true_coincidences[c] + m.accidentals[c];
  }
  for (Detector d : kDetectors) m.singles[idx(d)] = rates[idx(d)] * cfg.duration;
  return m;
}

ChannelCounts sample_counts(const ChannelProbabilities& probs, const AcquisitionConfig& cfg) {
  cfg.validate();
  const ChannelMeans m = expected_counts(probs, cfg);
  std::mt19937_64 rng(cfg.rng_seed);
  ChannelCounts out;
  for (std::size_t c = 0; c < out.coincidences.size(); ++c) out.coincidences[c] = poisson(rng, m.coincidences[c]);
  for (std::size_t d = 0; d < out.singles.size(); ++d) out.singles[d] = poisson(rng, m.singles[d]);
  return out;
}

TimestampStreams generate_timestamps(const ChannelProbabilities& probs, const AcquisitionConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  TimestampStreams streams;
  for (Detector d : kDetectors) streams[idx(d)].detector = d;

  // Outcomes 0..5 are channels, 6..9 bunched detectors, 10 is loss.
  std::array<double, 11> weights{};
  double total = 0.0;
  for (std::size_t c = 0; c < 6; ++c) total += weights[c] = std::max(0.0, probs.coincidence[c]);
  for (std::size_t d = 0; d < 4; ++d) total += weights[6 + d] = std::max(0.0, probs.bunched[d]);
  weights[10] = std::max(0.0, 1.0 - total);

  std::uniform_real_distribution<double> when(0.0, cfg.duration);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, cfg.jitter);
  auto jittered = [&](double t) { return cfg.jitter > 0.0 ? t + jitter(rng) : t; };

  const std::int64_t pairs = poisson(rng, cfg.pair_rate * cfg.duration);
  if (pairs > 0 && total > 0.0) {
    std::discrete_distribution<int> outcome(weights.begin(), weights.end());
    for (std::int64_t n = 0; n < pairs; ++n) {
      const double t = when(rng);
      const int o = outcome(rng);
      if (o < 6) {
        const auto [d1, d2] = detectors_of(kChannels[static_cast<std::size_t>(o)]);
        if (unit(rng) < cfg.efficiency[idx(d1)]) streams[idx(d1)].times.push_back(jittered(t));
        if (unit(rng) < cfg.efficiency[idx(d2)]) streams[idx(d2)].times.push_back(jittered(t));
      } else if (o < 10) {
        const auto d = static_cast<std::size_t>(o - 6);
        const double miss = 1.0 - cfg.efficiency[d];
        if (unit(rng) < 1.0 - miss * miss) streams[d].times.push_back(jittered(t));
      }
    }
  }
  for (Detector d : kDetectors) {
    const std::int64_t darks = poisson(rng, cfg.dark_rate[idx(d)] * cfg.duration);
    auto& times = streams[idx(d)].times;
    for (std::int64_t n = 0; n < darks; ++n) times.push_back(when(rng));
  }
  for (auto& s : streams) {
    std::sort(s.times.begin(), s.times.end());
    for (std::size_t k = 1; k < s.times.size(); ++k) {
      if (s.times[k] <= s.times[k - 1]) s.times[k] = std::nextafter(s.times[k - 1], std::numeric_limits<double>::infinity());
    }
  }
  return streams;
}

ChannelCounts count_coincidences(const TimestampStreams& streams, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("coincidence window must be > 0");
  for (const auto& s : streams) check_strictly_increasing(s);
  // Streams may arrive in any order; look them up by detector id.
  std::array<const std::vector<double>*, 4> by_detector{};
  for (const auto& s : streams) by_detector[idx(s.detector)] = &s.times;
  for (const auto* p : by_detector) {
    if (p == nullptr) throw std::invalid_argument("timestamp streams must cover all four detectors");
  }

  ChannelCounts out;
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    out.coincidences[static_cast<std::size_t>(ch)] = sweep(*by_detector[idx(d1)], *by_detector[idx(d2)], window);
  }
  for (Detector d : kDetectors) out.singles[idx(d)] = static_cast<std::int64_t>(by_detector[idx(d)]->size());
  return out;
}

void write_timestamps(std::ostream& out, const TimestampStreams& streams) {
  std::array<std::size_t, 4> pos{};
  char buf[64];
  while (true) {
    int best = -1;
    for (int s = 0; s < 4; ++s) {
      if (pos[s] >= streams[s].times.size()) continue;
      if (best < 0 || streams[s].times[pos[s]] < streams[best].times[pos[best]]) best = s;
    }
    if (best < 0) break;
    std::snprintf(buf, sizeof buf, "\t%.17g\n", streams[best].times[pos[best]]);
    out << to_string(streams[best].detector) << buf;
    ++pos[best];
  }
}

TimestampStreams read_timestamps(std::istream& in) {
  TimestampStreams streams;
  for (Detector d : kDetectors) streams[idx(d)].detector = d;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("timestamp line " + std::to_string(lineno) + ": expected 'detector<TAB>time'");
    }
    const auto det = parse_detector(std::string_view(line).substr(0, tab));
    if (!det) {
      throw std::invalid_argument("timestamp line " + std::to_string(lineno) + ": unknown detector '" +
                                  line.substr(0, tab) + "'");
    }
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(line.substr(tab + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw std::invalid_argument("timestamp line " + std::to_string(lineno) + ": bad time value");
    streams[idx(*det)].times.push_back(t);
  }
  return streams;
}

}  // namespace biphoton
