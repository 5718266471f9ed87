#include "biphoton/elements.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace biphoton {

namespace {

struct ModeTerm {
  Mode mode;
  complex coeff;
};

using ModeImage = std::vector<ModeTerm>;

// Substitutes each creation operator by a linear combination of output
// creation operators and collects the result back into the Fock basis.
template <typename MapFn>
TwoPhotonState transform_modes(const TwoPhotonState& in, PathSet out_paths, MapFn&& image_of) {
  TwoPhotonState out(out_paths);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (const auto& [pair, amp] : in.amplitudes()) {
    if (amp == complex{}) continue;
    // Coefficient of the operator product a†_x a†_y.
    const complex poly = pair.doubly_occupied() ? amp * inv_sqrt2 : amp;
    const ModeImage lhs = image_of(pair.first());
    const ModeImage rhs = image_of(pair.second());
    for (const auto& u : lhs) {
      for (const auto& v : rhs) {
        const complex c = poly * u.coeff * v.coeff;
        if (c == complex{}) continue;
        // a†_u a†_u = sqrt(2) |2_u>
        out.add_amplitude(u.mode, v.mode, u.mode == v.mode ? c * std::numbers::sqrt2 : c);
      }
    }
  }
  return out;
}

}  // namespace

bool JonesMatrix::is_unitary(double tol) const {
  const JonesMatrix p = adjoint() * (*this);
  return approx_equal(p, identity(), tol);
}

JonesMatrix operator*(const JonesMatrix& l, const JonesMatrix& r) {
  return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

bool approx_equal(const JonesMatrix& x, const JonesMatrix& y, double tol) {
  return std::abs(x.a - y.a) <= tol && std::abs(x.b - y.b) <= tol && std::abs(x.c - y.c) <= tol &&
         std::abs(x.d - y.d) <= tol;
}

JonesDecomposition decompose(const JonesMatrix& m) {
  return {(m.a + m.d) / 2.0, (m.a - m.d) / 2.0, (m.b + m.c) / 2.0, (m.b - m.c) / 2.0};
}

JonesMatrix compose(const JonesDecomposition& p) {
  return {p.alpha + p.beta, p.kappa + p.delta, p.kappa - p.delta, p.alpha - p.beta};
}

JonesMatrix rotation(Angle theta) {
  const double c = std::cos(theta.radians());
  const double s = std::sin(theta.radians());
  return {c, s, -s, c};
}

JonesMatrix retarder(Angle phase, Angle axis) {
  // Lab frame -> element frame is rotation(axis); back is its transpose.
  const JonesMatrix to_element = rotation(axis);
  const JonesMatrix to_lab = rotation(Angle::radians(-axis.radians()));
  const JonesMatrix diag{1.0, 0.0, 0.0, std::polar(1.0, phase.radians())};
  return to_lab * diag * to_element;
}

JonesMatrix hwp(Angle theta) {
  const double c = std::cos(2.0 * theta.radians());
  const double s = std::sin(2.0 * theta.radians());
  return {c, s, s, -c};
}

JonesMatrix qwp(Angle theta) { return retarder(Angle::radians(std::numbers::pi / 2.0), theta); }

JonesMatrix faraday(Angle theta) { return rotation(theta); }

bool OpticalElement::mixes_polarization(double tol) const {
  return std::abs(jones.b) > tol || std::abs(jones.c) > tol;
}

void OpticalElement::validate() const {
  if (!(extra_path_h_um >= 0.0) || !(extra_path_v_um >= 0.0)) {
    throw std::invalid_argument("element '" + name + "': extra optical path must be >= 0");
  }
}

TwoPhotonState apply_to_arm(const TwoPhotonState& state, const JonesMatrix& m, Path arm) {
  if (!contains(state.paths(), arm)) {
    throw std::invalid_argument("arm " + std::string(to_string(arm)) + " is not part of the state's path set");
  }
  return transform_modes(state, state.paths(), [&](Mode x) -> ModeImage {
    if (x.path != arm) return {{x, 1.0}};
    // Column of the Jones matrix for the input polarization.
    if (x.pol == Pol::H) return {{{arm, Pol::H}, m.a}, {{arm, Pol::V}, m.c}};
    return {{{arm, Pol::H}, m.b}, {{arm, Pol::V}, m.d}};
  });
}

PortAmplitudes beamsplitter_ports(Path input) {
  const double r = 1.0 / std::numbers::sqrt2;
  switch (input) {
    case Path::a:
      return {r, -r};
    case Path::b:
      return {r, r};
    default:
      throw std::invalid_argument("beamsplitter inputs are paths a and b");
  }
}

TwoPhotonState beamsplitter(const TwoPhotonState& state) {
  if (state.paths() != PathSet::input) {
    throw std::invalid_argument("beamsplitter expects a state on the input paths a, b");
  }
  return transform_modes(state, PathSet::output, [](Mode x) -> ModeImage {
    const PortAmplitudes p = beamsplitter_ports(x.path);
    return {{{Path::c, x.pol}, p.to_c}, {{Path::d, x.pol}, p.to_d}};
  });
}

}  // namespace biphoton
