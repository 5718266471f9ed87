#include "biphoton/interference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace biphoton {

namespace {

constexpr std::array<std::string_view, 4> kDetectorNames{"Hc", "Vc", "Hd", "Vd"};
constexpr std::array<std::string_view, 6> kChannelNames{"Hc:Hd", "Hc:Vd", "Vc:Hd", "Vc:Vd", "Hc:Vc", "Hd:Vd"};

// Root of sin(x)/x = 1/sqrt(2): half-maximum point of sinc^2.
double sinc2_half_max() {
  static const double root = [] {
    double x = 1.4;
    for (int i = 0; i < 50; ++i) {
      const double f = std::sin(x) / x - std::numbers::sqrt2 / 2.0;
      const double df = (x * std::cos(x) - std::sin(x)) / (x * x);
      const double step = f / df;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    return x;
  }();
  return root;
}

// 2x2 first-quantized amplitude psi(pol of photon in a, pol of photon in b).
using PairAmplitude = std::array<std::array<complex, 2>, 2>;

PairAmplitude to_pair_amplitude(const TwoPhotonState& state) {
  if (state.paths() != PathSet::input) {
    throw std::invalid_argument("source must be on the input paths a, b");
  }
  PairAmplitude psi{};
  for (const auto& [pair, amp] : state.amplitudes()) {
    if (amp == complex{}) continue;
    const Mode x = pair.first();
    const Mode y = pair.second();
    if (x.path == y.path) {
      throw std::invalid_argument("source must carry exactly one photon in each input arm");
    }
    // ModePair ordering puts the arm-a mode first.
    psi[static_cast<std::size_t>(x.pol)][static_cast<std::size_t>(y.pol)] += amp;
  }
  return psi;
}

void apply_stack(PairAmplitude& psi, const std::vector<OpticalElement>& stack, bool arm_a) {
  for (const auto& e : stack) {
    if (!e.jones.is_unitary(1e-9)) {
      throw std::invalid_argument("element '" + e.name + "' is not unitary; lossy elements are not supported here");
    }
    const JonesMatrix& m = e.jones;
    PairAmplitude out{};
    for (int s = 0; s < 2; ++s) {
      for (int t = 0; t < 2; ++t) {
        const complex v = psi[s][t];
        if (v == complex{}) continue;
        // Column of m for input polarization.
        const std::array<complex, 2> col = (arm_a ? s : t) == 0 ? std::array{m.a, m.c} : std::array{m.b, m.d};
        for (int o = 0; o < 2; ++o) {
          if (arm_a) {
            out[o][t] += col[o] * v;
          } else {
            out[s][o] += col[o] * v;
          }
        }
      }
    }
    psi = out;
  }
}

template <typename KernelFn>
ChannelProbabilities propagate(const TwoPhotonState& source, const ArmStacks& arms, KernelFn&& kernel_for) {
  if (!source.is_normalized(1e-9)) {
    throw std::invalid_argument("source state is not normalized (norm^2 = " + std::to_string(source.norm_squared()) +
                                ")");
  }
  PairAmplitude psi = to_pair_amplitude(source);
  apply_stack(psi, arms.a, true);
  apply_stack(psi, arms.b, false);

  const PortAmplitudes ua = beamsplitter_ports(Path::a);
  const PortAmplitudes ub = beamsplitter_ports(Path::b);
  auto port_amp = [](const PortAmplitudes& p, Path port) { return port == Path::c ? p.to_c : p.to_d; };

  // Amplitude for photon-from-a at detector i and photon-from-b at detector j.
  auto direct = [&](Detector i, Detector j) {
    const Mode mi = detector_mode(i);
    const Mode mj = detector_mode(j);
    return psi[static_cast<std::size_t>(mi.pol)][static_cast<std::size_t>(mj.pol)] * port_amp(ua, mi.path) *
           port_amp(ub, mj.path);
  };

  ChannelProbabilities out;
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    const complex a12 = direct(d1, d2);
    const complex a21 = direct(d2, d1);
    const double k = kernel_for(detector_mode(d1).pol, detector_mode(d2).pol);
    out.coincidence[static_cast<std::size_t>(ch)] =
        std::norm(a12) + std::norm(a21) + 2.0 * (a12 * std::conj(a21)).real() * k;
  }
  for (Detector d : kDetectors) {
    const complex a = direct(d, d);
    const Pol p = detector_mode(d).pol;
    out.bunched[static_cast<std::size_t>(d)] = std::norm(a) * (1.0 + kernel_for(p, p));
  }
  return out;
}

}  // namespace

std::string_view to_string(Detector d) { return kDetectorNames[static_cast<std::size_t>(d)]; }
std::string_view to_string(Channel ch) { return kChannelNames[static_cast<std::size_t>(ch)]; }

std::optional<Detector> parse_detector(std::string_view text) {
  for (std::size_t i = 0; i < kDetectorNames.size(); ++i) {
    if (text == kDetectorNames[i]) return static_cast<Detector>(i);
  }
  return std::nullopt;
}

std::optional<Channel> parse_channel(std::string_view text) {
  std::string_view first, second;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    first = text.substr(0, colon);
    second = text.substr(colon + 1);
  } else if (text.size() == 4) {
    first = text.substr(0, 2);
    second = text.substr(2);
  } else {
    return std::nullopt;
  }
  const auto d1 = parse_detector(first);
  const auto d2 = parse_detector(second);
  if (!d1 || !d2 || *d1 == *d2) return std::nullopt;
  for (Channel ch : kChannels) {
    const auto [x, y] = detectors_of(ch);
    if ((x == *d1 && y == *d2) || (x == *d2 && y == *d1)) return ch;
  }
  return std::nullopt;
}

Mode detector_mode(Detector d) {
  switch (d) {
    case Detector::Hc:
      return {Path::c, Pol::H};
    case Detector::Vc:
      return {Path::c, Pol::V};
    case Detector::Hd:
      return {Path::d, Pol::H};
    case Detector::Vd:
      return {Path::d, Pol::V};
  }
  throw std::logic_error("unreachable detector");
}

std::pair<Detector, Detector> detectors_of(Channel ch) {
  switch (ch) {
    case Channel::HcHd:
      return {Detector::Hc, Detector::Hd};
    case Channel::HcVd:
      return {Detector::Hc, Detector::Vd};
    case Channel::VcHd:
      return {Detector::Vc, Detector::Hd};
    case Channel::VcVd:
      return {Detector::Vc, Detector::Vd};
    case Channel::HcVc:
      return {Detector::Hc, Detector::Vc};
    case Channel::HdVd:
      return {Detector::Hd, Detector::Vd};
  }
  throw std::logic_error("unreachable channel");
}

std::string_view to_string(FilterShape shape) { return shape == FilterShape::gaussian ? "gaussian" : "rectangular"; }

std::optional<FilterShape> parse_filter_shape(std::string_view text) {
  if (text == "gaussian") return FilterShape::gaussian;
  if (text == "rectangular") return FilterShape::rectangular;
  return std::nullopt;
}

double coherence_length_from_bandwidth(double center_nm, double bandwidth_nm) {
  return center_nm * center_nm / (2.0 * std::numbers::pi * bandwidth_nm) * 1e-3;
}

double SpectralFilter::dip_fwhm_um() const {
  return coherence_length_um ? *coherence_length_um : coherence_length_from_bandwidth(center_nm, bandwidth_nm);
}

void SpectralFilter::validate() const {
  if (!(bandwidth_nm > 0.0)) throw std::invalid_argument("filter bandwidth must be > 0");
  if (!(center_nm > 0.0)) throw std::invalid_argument("filter center wavelength must be > 0");
  if (coherence_length_um && !(*coherence_length_um > 0.0)) {
    throw std::invalid_argument("coherence length must be > 0");
  }
}

double overlap_kernel(const SpectralFilter& filter, double delta_um) {
  const double width = filter.dip_fwhm_um();
  if (filter.shape == FilterShape::gaussian) {
    return std::exp(-4.0 * std::numbers::ln2 * delta_um * delta_um / (width * width));
  }
  // Central lobe of sinc^2(pi delta / l_eff) has FWHM equal to `width`.
  const double l_eff = std::numbers::pi * width / (2.0 * sinc2_half_max());
  const double x = std::numbers::pi * delta_um / l_eff;
  if (std::abs(x) < 1e-8) return 1.0;
  const double s = std::sin(x) / x;
  return s * s;
}

double TemporalLabels::at(Path arm, Pol pol) const {
  const auto i = static_cast<std::size_t>(pol);
  switch (arm) {
    case Path::a:
      return arm_a[i];
    case Path::b:
      return arm_b[i];
    default:
      throw std::invalid_argument("temporal labels exist for input arms only");
  }
}

TemporalLabels temporal_labels(const ArmStacks& arms, double stage_delay_um) {
  auto walk = [](const std::vector<OpticalElement>& stack) {
    std::array<double, 2> l{};
    for (const auto& e : stack) {
      if (e.mixes_polarization()) {
        const double mean = 0.5 * (l[0] + l[1]) + 0.5 * (e.extra_path_h_um + e.extra_path_v_um);
        l = {mean, mean};
      } else {
        l[0] += e.extra_path_h_um;
        l[1] += e.extra_path_v_um;
      }
    }
    return l;
  };
  TemporalLabels labels;
  labels.arm_a = walk(arms.a);
  labels.arm_b = walk(arms.b);
  labels.arm_b[0] += stage_delay_um;
  labels.arm_b[1] += stage_delay_um;
  return labels;
}

double ChannelProbabilities::total() const {
  double t = 0.0;
  for (double p : coincidence) t += p;
  for (double p : bunched) t += p;
  return t;
}

ChannelProbabilities coincidence_probabilities(const TwoPhotonState& source, const ArmStacks& arms,
                                               double stage_delay_um, const SpectralFilter& filter,
                                               double mode_overlap) {
  if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) {
    throw std::invalid_argument("mode overlap must lie in [0, 1]");
  }
  const TemporalLabels labels = temporal_labels(arms, stage_delay_um);
  auto arm_delta = [&](Pol p) { return labels.at(Path::a, p) - labels.at(Path::b, p); };
  return propagate(source, arms, [&](Pol p1, Pol p2) {
    const double delta = 0.5 * (arm_delta(p1) + arm_delta(p2));
    return mode_overlap * overlap_kernel(filter, delta);
  });
}

ChannelProbabilities coincidence_probabilities_at_kernel(const TwoPhotonState& source, const ArmStacks& arms,
                                                         double kernel) {
  return propagate(source, arms, [kernel](Pol, Pol) { return kernel; });
}

}  // namespace biphoton
