#pragma once

#include <numbers>
#include <string>

#include "biphoton/fock_state.hpp"

namespace biphoton {

class Angle {
 public:
  constexpr Angle() = default;
  static constexpr Angle radians(double r) { return Angle(r); }
  static constexpr Angle degrees(double d) { return Angle(d * std::numbers::pi / 180.0); }

  constexpr double radians() const { return rad_; }
  constexpr double degrees() const { return rad_ * 180.0 / std::numbers::pi; }

 private:
  constexpr explicit Angle(double r) : rad_(r) {}
  double rad_ = 0.0;
};

/// 2x2 Jones matrix [[a, b], [c, d]] acting on (H, V) column vectors.
struct JonesMatrix {
  complex a{1.0}, b{}, c{}, d{1.0};

  static constexpr JonesMatrix identity() { return {}; }

  JonesMatrix adjoint() const { return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)}; }
  bool is_unitary(double tol = 1e-10) const;

  friend JonesMatrix operator*(const JonesMatrix& lhs, const JonesMatrix& rhs);
};

bool approx_equal(const JonesMatrix& x, const JonesMatrix& y, double tol = 1e-12);

/// Coefficients of T = alpha·1 + beta·diag(1,-1) + kappa·[[0,1],[1,0]] + delta·[[0,1],[-1,0]].
struct JonesDecomposition {
  complex alpha, beta, kappa, delta;
};

JonesDecomposition decompose(const JonesMatrix& m);
JonesMatrix compose(const JonesDecomposition& parts);

/// [[cos t, sin t], [-sin t, cos t]]
JonesMatrix rotation(Angle theta);
/// Linear retarder: phase delay of the slow axis relative to the fast axis, fast axis at `axis` from H.
JonesMatrix retarder(Angle phase, Angle axis);
/// Half-wave plate, fast axis at theta. Real form [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
JonesMatrix hwp(Angle theta);
/// Quarter-wave plate, fast axis at theta (standard retarder convention, global phase dropped).
JonesMatrix qwp(Angle theta);
/// Pure Faraday rotation. Same matrix as rotation(); field dependence lives in the scan driver.
JonesMatrix faraday(Angle theta);

/// An element placed in one interferometer arm: its polarization map plus the
/// optical path it adds for H and V light.
struct OpticalElement {
  std::string name = "identity";
  JonesMatrix jones;
  double extra_path_h_um = 0.0;
  double extra_path_v_um = 0.0;

  /// True when the element couples H and V (off-diagonal Jones entries).
  bool mixes_polarization(double tol = 1e-12) const;
  /// Throws std::invalid_argument on negative extra paths.
  void validate() const;
};

/// Applies the single-photon polarization map to every photon on `arm`.
/// The other arm is untouched. Modes on `arm` must belong to state.paths().
TwoPhotonState apply_to_arm(const TwoPhotonState& state, const JonesMatrix& m, Path arm);

/// Output-port amplitudes of one input path through the 50/50 beamsplitter,
/// i.e. a† -> (c† - d†)/sqrt2 and b† -> (c† + d†)/sqrt2. This sign choice
/// reproduces the stated outputs for Psi+ and Phi± exactly and Psi- up to a
/// global sign.
struct PortAmplitudes {
  double to_c;
  double to_d;
};
PortAmplitudes beamsplitter_ports(Path input);

/// Propagates an input-path state through the beamsplitter onto paths c, d.
/// Throws std::invalid_argument for states already on the output paths.
TwoPhotonState beamsplitter(const TwoPhotonState& state);

}  // namespace biphoton
