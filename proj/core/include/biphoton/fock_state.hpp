#pragma once

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace biphoton {

using complex = std::complex<double>;

/// Spatial path. a, b are the interferometer input arms; c, d the beamsplitter outputs.
enum class Path : std::uint8_t { a, b, c, d };
enum class Pol : std::uint8_t { H, V };

std::string_view to_string(Path path);
std::string_view to_string(Pol pol);
std::optional<Path> parse_path(std::string_view text);
std::optional<Pol> parse_pol(std::string_view text);

/// Single-photon mode. Ordered path-major, then polarization.
struct Mode {
  Path path;
  Pol pol;

  constexpr int index() const { return 2 * static_cast<int>(path) + static_cast<int>(pol); }
  friend constexpr auto operator<=>(const Mode&, const Mode&) = default;
};

/// Unordered pair of modes, stored canonically with first() <= second().
class ModePair {
 public:
  constexpr ModePair(Mode x, Mode y) : lo_(x < y ? x : y), hi_(x < y ? y : x) {}

  constexpr Mode first() const { return lo_; }
  constexpr Mode second() const { return hi_; }
  constexpr bool doubly_occupied() const { return lo_ == hi_; }

  friend constexpr auto operator<=>(const ModePair&, const ModePair&) = default;

 private:
  Mode lo_;
  Mode hi_;
};

/// Which pair of paths a state lives on: before ({a, b}) or after ({c, d}) the beamsplitter.
enum class PathSet : std::uint8_t { input, output };

bool contains(PathSet set, Path path);

enum class BellKind : std::uint8_t { PhiPlus, PhiMinus, PsiPlus, PsiMinus };
inline constexpr std::array<BellKind, 4> kBellKinds{BellKind::PhiPlus, BellKind::PhiMinus,
                                                   BellKind::PsiPlus, BellKind::PsiMinus};

std::string_view to_string(BellKind kind);
std::optional<BellKind> parse_bell_kind(std::string_view text);

/// Pure two-photon state over path x polarization modes.
///
/// Amplitudes are coefficients of the orthonormal Fock basis: for a pair of
/// distinct modes the ket is a†_x a†_y |0>, for a doubly occupied mode it is
/// |2_x> = a†_x a†_x |0> / sqrt(2). A creation-operator polynomial c·a†_x a†_x
/// therefore appears here with amplitude sqrt(2)·c, and probabilities are plain
/// |amplitude|^2.
class TwoPhotonState {
 public:
  using AmplitudeMap = std::map<ModePair, complex>;

  explicit TwoPhotonState(PathSet paths = PathSet::input) : paths_(paths) {}

  PathSet paths() const { return paths_; }
  const AmplitudeMap& amplitudes() const { return amplitudes_; }

  complex amplitude(Mode x, Mode y) const;
  /// Throws std::invalid_argument if either mode lies outside paths().
  void set_amplitude(Mode x, Mode y, complex value);
  void add_amplitude(Mode x, Mode y, complex value);

  double norm_squared() const;
  /// Throws std::domain_error on the zero state.
  TwoPhotonState& normalize();
  TwoPhotonState normalized() const;
  bool is_normalized(double tol = 1e-9) const;

  TwoPhotonState& operator*=(complex factor);
  TwoPhotonState& operator+=(const TwoPhotonState& other);

 private:
  void check_mode(Mode m) const;

  PathSet paths_;
  AmplitudeMap amplitudes_;
};

TwoPhotonState operator*(complex factor, TwoPhotonState state);
TwoPhotonState operator+(TwoPhotonState lhs, const TwoPhotonState& rhs);

/// Bell state on the input paths a, b.
TwoPhotonState make_bell(BellKind kind);

/// <x|y>, conjugate-linear in x. Throws std::invalid_argument on mismatched path sets.
complex inner_product(const TwoPhotonState& x, const TwoPhotonState& y);

/// Linear combination of states. Not normalized.
TwoPhotonState superpose(std::span<const std::pair<complex, TwoPhotonState>> terms);
TwoPhotonState superpose(std::initializer_list<std::pair<complex, TwoPhotonState>> terms);

struct BellFractions {
  std::array<double, 4> values{};

  double operator[](BellKind kind) const { return values[static_cast<std::size_t>(kind)]; }
  double sum() const { return values[0] + values[1] + values[2] + values[3]; }
};

/// |<Bell_k|state>|^2 for each Bell state. Requires a state on the input paths.
BellFractions bell_fractions(const TwoPhotonState& state);

/// |<x|y>| == |x||y| within tol, i.e. the states agree up to a global phase.
bool equal_up_to_phase(const TwoPhotonState& x, const TwoPhotonState& y, double tol = 1e-12);

/// Text form, one row per nonzero amplitude: "path pol path pol re im".
std::string to_text(const TwoPhotonState& state);
/// Inverse of to_text. Throws std::invalid_argument on malformed rows.
TwoPhotonState state_from_text(std::string_view text);

}  // namespace biphoton
