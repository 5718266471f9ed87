#include "biphoton/experiment.hpp"

#include <cmath>
#include <stdexcept>

namespace biphoton {

namespace {

void check_settings(std::span<const double> values, const char* what) {
  if (values.empty()) throw std::invalid_argument(std::string("empty ") + what + " list");
  if (values.size() < 2) return;
  const bool up = values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1])) {
      throw std::invalid_argument(std::string(what) + " settings must be strictly monotone");
    }
  }
}

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ChannelCounts measure(const Apparatus& app, const ArmStacks& arms, double delay_um, std::uint64_t seed) {
  const ChannelProbabilities p = coincidence_probabilities(app.source, arms, delay_um, app.filter, app.mode_overlap);
  AcquisitionConfig cfg = app.acquisition;
  cfg.rng_seed = seed;
  return sample_counts(p, cfg);
}

OpticalElement named(std::string name, JonesMatrix m, double extra_path_um = 0.0) {
  return {std::move(name), m, extra_path_um, extra_path_um};
}

}  // namespace

void Apparatus::validate() const {
  if (source.paths() != PathSet::input) throw std::invalid_argument("source must be on the input paths");
  if (!source.is_normalized(1e-9)) throw std::invalid_argument("source state is not normalized");
  for (const auto& e : arm_a) e.validate();
  for (const auto& e : arm_b) e.validate();
  filter.validate();
  if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) throw std::invalid_argument("mode_overlap must lie in [0, 1]");
  acquisition.validate();
}

TwoPhotonState source_from_fractions(const std::array<double, 4>& fractions) {
  TwoPhotonState s(PathSet::input);
  for (BellKind k : kBellKinds) {
    const double w = fractions[static_cast<std::size_t>(k)];
    if (!(w >= 0.0)) throw std::invalid_argument("Bell fractions must be >= 0");
    if (w > 0.0) s += complex{std::sqrt(w)} * make_bell(k);
  }
  return s.normalize();
}

std::vector<double> ScanResult::settings() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.setting);
  return out;
}

std::vector<double> ScanResult::channel(Channel ch) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(static_cast<double>(r.counts[ch]));
  return out;
}

void FaradaySample::validate() const {
  if (!(length_m > 0.0)) throw std::invalid_argument("sample length must be > 0");
  if (!(extra_path_um >= 0.0)) throw std::invalid_argument("sample extra path must be >= 0");
}

Angle faraday_angle(const FaradaySample& sample, double field_tesla) {
  return Angle::radians(sample.verdet * sample.length_m * field_tesla);
}

std::uint64_t row_seed(std::uint64_t master, std::uint64_t row) { return mix(mix(master) + row); }

ScanResult run_delay_scan(const Apparatus& app, std::span<const double> delays_um) {
  check_settings(delays_um, "delay");
  app.validate();
  ScanResult result{"delay", "um", {}, app, app.acquisition.rng_seed};
  const ArmStacks arms = app.stacks();
  result.rows.reserve(delays_um.size());
  for (std::size_t i = 0; i < delays_um.size(); ++i) {
    result.rows.push_back({delays_um[i], measure(app, arms, delays_um[i], row_seed(app.acquisition.rng_seed, i))});
  }
  return result;
}

ScanResult run_hwp_scan(const Apparatus& app, std::span<const double> angles_deg, double at_delay_um) {
  check_settings(angles_deg, "HWP angle");
  app.validate();
  ScanResult result{"hwp_angle", "deg", {}, app, app.acquisition.rng_seed};
  result.rows.reserve(angles_deg.size());
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    ArmStacks arms = app.stacks();
    arms.a.insert(arms.a.begin(), named("hwp", hwp(Angle::degrees(angles_deg[i]))));
    result.rows.push_back({angles_deg[i], measure(app, arms, at_delay_um, row_seed(app.acquisition.rng_seed, i))});
  }
  return result;
}

ScanResult run_rotation_scan(const Apparatus& app, std::span<const double> angles_deg, double at_delay_um,
                             double extra_path_um) {
  check_settings(angles_deg, "rotation angle");
  app.validate();
  ScanResult result{"rotation_angle", "deg", {}, app, app.acquisition.rng_seed};
  result.rows.reserve(angles_deg.size());
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    ArmStacks arms = app.stacks();
    arms.a.insert(arms.a.begin(), named("rotator", rotation(Angle::degrees(angles_deg[i])), extra_path_um));
    result.rows.push_back({angles_deg[i], measure(app, arms, at_delay_um, row_seed(app.acquisition.rng_seed, i))});
  }
  return result;
}

std::vector<ScanResult> run_field_scan(const Apparatus& app, const FaradaySample& sample,
                                       std::span<const double> fields_tesla, std::span<const double> delays_um,
                                       const CenterOffset& center_offset) {
  sample.validate();
  std::vector<ScanResult> out;
  out.reserve(fields_tesla.size());
  for (std::size_t f = 0; f < fields_tesla.size(); ++f) {
    const double field = fields_tesla[f];
    Apparatus at_field = app;
    at_field.arm_a.insert(at_field.arm_a.begin(),
                          named("faraday", faraday(faraday_angle(sample, field)), sample.extra_path_um));
    at_field.acquisition.rng_seed = row_seed(app.acquisition.rng_seed, 1'000'000 + f);
    if (center_offset) {
      // The stage reads `d` while the true relative delay is d + offset.
      const double shift = center_offset(field);
      const OpticalElement offset{"stage_offset", JonesMatrix::identity(), std::abs(shift), std::abs(shift)};
      (shift >= 0.0 ? at_field.arm_b : at_field.arm_a).push_back(offset);
    }
    ScanResult scan = run_delay_scan(at_field, delays_um);
    scan.variable = "delay";
    out.push_back(std::move(scan));
  }
  return out;
}

}  // namespace biphoton
