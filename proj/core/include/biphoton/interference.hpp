#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "biphoton/elements.hpp"
#include "biphoton/fock_state.hpp"

namespace biphoton {

/// Polarization-resolved detectors behind the two output PBSs.
enum class Detector : std::uint8_t { Hc, Vc, Hd, Vd };
inline constexpr std::array<Detector, 4> kDetectors{Detector::Hc, Detector::Vc, Detector::Hd, Detector::Vd};

/// Coincidence channels, in the fixed column order used by scan files.
enum class Channel : std::uint8_t { HcHd, HcVd, VcHd, VcVd, HcVc, HdVd };
inline constexpr std::array<Channel, 6> kChannels{Channel::HcHd, Channel::HcVd, Channel::VcHd,
                                                 Channel::VcVd, Channel::HcVc, Channel::HdVd};

std::string_view to_string(Detector d);
std::string_view to_string(Channel ch);
std::optional<Detector> parse_detector(std::string_view text);
/// Accepts "Hc:Hd" (either detector order) or "HcHd".
std::optional<Channel> parse_channel(std::string_view text);

Mode detector_mode(Detector d);
std::pair<Detector, Detector> detectors_of(Channel ch);

enum class FilterShape : std::uint8_t { gaussian, rectangular };

std::string_view to_string(FilterShape shape);
std::optional<FilterShape> parse_filter_shape(std::string_view text);

/// lambda^2 / (2 pi dlambda), returned in micrometres.
double coherence_length_from_bandwidth(double center_nm, double bandwidth_nm);

struct SpectralFilter {
  FilterShape shape = FilterShape::gaussian;
  double center_nm = 810.0;
  double bandwidth_nm = 10.0;
  /// Dip FWHM in stage displacement. When unset the bandwidth formula is used.
  std::optional<double> coherence_length_um;

  double dip_fwhm_um() const;
  /// Throws std::invalid_argument on non-positive bandwidth, centre or coherence length.
  void validate() const;
};

/// Two-photon overlap K(delta) in [0, 1]; K(0) = 1 and K(±fwhm/2) = 1/2.
/// Gaussian: exp(-4 ln2 delta^2 / l^2). Rectangular: sinc^2 with matching central-lobe FWHM.
double overlap_kernel(const SpectralFilter& filter, double delta_um);

struct ArmStacks {
  std::vector<OpticalElement> a;
  std::vector<OpticalElement> b;
};

/// Accumulated optical path per (input arm, polarization) at the beamsplitter.
struct TemporalLabels {
  std::array<double, 2> arm_a{};  // indexed by Pol
  std::array<double, 2> arm_b{};

  double at(Path arm, Pol pol) const;
};

/// Walks each stack in order. Diagonal elements add their per-polarization
/// path; polarization-mixing elements average the running labels and add the
/// mean of their extra paths. The stage delay is added to arm b.
TemporalLabels temporal_labels(const ArmStacks& arms, double stage_delay_um);

struct ChannelProbabilities {
  std::array<double, 6> coincidence{};  // indexed by Channel
  std::array<double, 4> bunched{};      // both photons on one detector, indexed by Detector

  double operator[](Channel ch) const { return coincidence[static_cast<std::size_t>(ch)]; }
  double bunched_at(Detector d) const { return bunched[static_cast<std::size_t>(d)]; }
  double total() const;
};

/// Outcome probabilities for a source on paths a, b, after the per-arm
/// element stacks, the beamsplitter and the polarizing splitters.
///
/// Each outcome's amplitude splits into the direct term (photon from arm a at
/// the first detector) and the exchanged term. The cross term between them is
/// weighted by mode_overlap · K(delta), where delta is the mean over the two
/// detected polarizations of the arm-a minus arm-b temporal label.
///
/// Throws std::invalid_argument for a non-normalized source, a source that is
/// not one photon per input arm, or a non-unitary element.
ChannelProbabilities coincidence_probabilities(const TwoPhotonState& source, const ArmStacks& arms,
                                               double stage_delay_um, const SpectralFilter& filter,
                                               double mode_overlap = 1.0);

/// Same model with a single kernel value applied to every outcome.
ChannelProbabilities coincidence_probabilities_at_kernel(const TwoPhotonState& source, const ArmStacks& arms,
                                                         double kernel);

}  // namespace biphoton
