#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "biphoton/detection.hpp"
#include "biphoton/elements.hpp"
#include "biphoton/fock_state.hpp"
#include "biphoton/interference.hpp"

namespace biphoton {

/// Declarative description of the interferometer: source, per-arm element
/// stacks (sample in arm a, compensator in arm b), filter, detection.
struct Apparatus {
  TwoPhotonState source = make_bell(BellKind::PhiPlus);
  std::vector<OpticalElement> arm_a;
  std::vector<OpticalElement> arm_b;
  SpectralFilter filter;
  /// Spatial/spectral mode overlap beyond the delay kernel; caps the dip visibility.
  double mode_overlap = 1.0;
  AcquisitionConfig acquisition;

  ArmStacks stacks() const { return {arm_a, arm_b}; }
  /// Throws std::invalid_argument on any invalid part.
  void validate() const;
};

/// Source with the given Bell-state weights (PhiPlus, PhiMinus, PsiPlus, PsiMinus),
/// real non-negative amplitudes sqrt(weight), normalized.
TwoPhotonState source_from_fractions(const std::array<double, 4>& fractions);

struct ScanRow {
  double setting = 0.0;
  ChannelCounts counts;

  friend bool operator==(const ScanRow&, const ScanRow&) = default;
};

struct ScanResult {
  std::string variable;
  std::string units;
  std::vector<ScanRow> rows;
  Apparatus apparatus;
  std::uint64_t seed = 0;

  std::vector<double> settings() const;
  std::vector<double> channel(Channel ch) const;
};

struct FaradaySample {
  double verdet = 0.0;       // rad T^-1 m^-1
  double length_m = 0.01;
  double extra_path_um = 0.0;

  void validate() const;
};

/// theta = V L B
Angle faraday_angle(const FaradaySample& sample, double field_tesla);

/// Seed for one scan row. Rows draw independent noise from the master seed.
std::uint64_t row_seed(std::uint64_t master, std::uint64_t row);

/// Per-point coincidence counts versus stage delay (um) on arm b.
ScanResult run_delay_scan(const Apparatus& app, std::span<const double> delays_um);

/// HWP at each angle (deg) prepended to arm a, measured at one stage delay.
ScanResult run_hwp_scan(const Apparatus& app, std::span<const double> angles_deg, double at_delay_um);

/// Known polarization rotation (deg) prepended to arm a, measured at one stage delay.
/// Used to calibrate the saturating sin^2 response of a rotation measurement.
ScanResult run_rotation_scan(const Apparatus& app, std::span<const double> angles_deg, double at_delay_um,
                             double extra_path_um = 0.0);

/// Optional per-field shift of the delay axis (um), e.g. to emulate a drifting stage.
using CenterOffset = std::function<double(double field_tesla)>;

/// One delay scan per field with a Faraday element for theta = V L B in arm a.
std::vector<ScanResult> run_field_scan(const Apparatus& app, const FaradaySample& sample,
                                       std::span<const double> fields_tesla, std::span<const double> delays_um,
                                       const CenterOffset& center_offset = {});

}  // namespace biphoton
