#include "biphoton/fock_state.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace biphoton {

namespace {

constexpr std::array<std::string_view, 4> kPathNames{"a", "b", "c", "d"};
constexpr std::array<std::string_view, 2> kPolNames{"H", "V"};
constexpr std::array<std::string_view, 4> kBellNames{"PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus"};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(Path path) { return kPathNames[static_cast<std::size_t>(path)]; }
std::string_view to_string(Pol pol) { return kPolNames[static_cast<std::size_t>(pol)]; }

std::optional<Path> parse_path(std::string_view text) {
  for (std::size_t i = 0; i < kPathNames.size(); ++i) {
    if (text == kPathNames[i]) return static_cast<Path>(i);
  }
  return std::nullopt;
}

std::optional<Pol> parse_pol(std::string_view text) {
  if (text == "H") return Pol::H;
  if (text == "V") return Pol::V;
  return std::nullopt;
}

bool contains(PathSet set, Path path) {
  const bool input = path == Path::a || path == Path::b;
  return set == PathSet::input ? input : !input;
}

std::string_view to_string(BellKind kind) { return kBellNames[static_cast<std::size_t>(kind)]; }

std::optional<BellKind> parse_bell_kind(std::string_view text) {
  for (std::size_t i = 0; i < kBellNames.size(); ++i) {
    if (text == kBellNames[i]) return static_cast<BellKind>(i);
  }
  return std::nullopt;
}

void TwoPhotonState::check_mode(Mode m) const {
  if (!contains(paths_, m.path)) {
    throw std::invalid_argument("mode on path " + std::string(to_string(m.path)) +
                                " is outside the state's path set");
  }
}

complex TwoPhotonState::amplitude(Mode x, Mode y) const {
  auto it = amplitudes_.find(ModePair{x, y});
  return it == amplitudes_.end() ? complex{} : it->second;
}

void TwoPhotonState::set_amplitude(Mode x, Mode y, complex value) {
  check_mode(x);
  check_mode(y);
  amplitudes_[ModePair{x, y}] = value;
}

void TwoPhotonState::add_amplitude(Mode x, Mode y, complex value) {
  check_mode(x);
  check_mode(y);
  amplitudes_[ModePair{x, y}] += value;
}

double TwoPhotonState::norm_squared() const {
  double total = 0.0;
  for (const auto& [pair, amp] : amplitudes_) total += std::norm(amp);
  return total;
}

TwoPhotonState& TwoPhotonState::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0)) throw std::domain_error("cannot normalize the zero state");
  const double scale = 1.0 / std::sqrt(n2);
  for (auto& [pair, amp] : amplitudes_) amp *= scale;
  return *this;
}

TwoPhotonState TwoPhotonState::normalized() const {
  TwoPhotonState copy = *this;
  copy.normalize();
  return copy;
}

bool TwoPhotonState::is_normalized(double tol) const { return std::abs(norm_squared() - 1.0) <= tol; }

TwoPhotonState& TwoPhotonState::operator*=(complex factor) {
  for (auto& [pair, amp] : amplitudes_) amp *= factor;
  return *this;
}

TwoPhotonState& TwoPhotonState::operator+=(const TwoPhotonState& other) {
  if (other.paths_ != paths_) throw std::invalid_argument("cannot add states on different path sets");
  for (const auto& [pair, amp] : other.amplitudes_) amplitudes_[pair] += amp;
  return *this;
}

TwoPhotonState operator*(complex factor, TwoPhotonState state) {
  state *= factor;
  return state;
}

TwoPhotonState operator+(TwoPhotonState lhs, const TwoPhotonState& rhs) {
  lhs += rhs;
  return lhs;
}

TwoPhotonState make_bell(BellKind kind) {
  const double r = std::numbers::sqrt2 / 2.0;
  TwoPhotonState s(PathSet::input);
  const Mode aH{Path::a, Pol::H}, aV{Path::a, Pol::V};
  const Mode bH{Path::b, Pol::H}, bV{Path::b, Pol::V};
  switch (kind) {
    case BellKind::PhiPlus:
      s.set_amplitude(aH, bH, r);
      s.set_amplitude(aV, bV, r);
      break;
    case BellKind::PhiMinus:
      s.set_amplitude(aH, bH, r);
      s.set_amplitude(aV, bV, -r);
      break;
    case BellKind::PsiPlus:
      s.set_amplitude(aH, bV, r);
      s.set_amplitude(aV, bH, r);
      break;
    case BellKind::PsiMinus:
      s.set_amplitude(aH, bV, r);
      s.set_amplitude(aV, bH, -r);
      break;
  }
  return s;
}

complex inner_product(const TwoPhotonState& x, const TwoPhotonState& y) {
  if (x.paths() != y.paths()) throw std::invalid_argument("inner product of states on different path sets");
  complex total{};
  for (const auto& [pair, amp] : x.amplitudes()) {
    auto it = y.amplitudes().find(pair);
    if (it != y.amplitudes().end()) total += std::conj(amp) * it->second;
  }
  return total;
}

TwoPhotonState superpose(std::span<const std::pair<complex, TwoPhotonState>> terms) {
  if (terms.empty()) throw std::invalid_argument("superpose needs at least one term");
  TwoPhotonState out(terms.front().second.paths());
  for (const auto& [coeff, state] : terms) out += coeff * state;
  return out;
}

TwoPhotonState superpose(std::initializer_list<std::pair<complex, TwoPhotonState>> terms) {
  return superpose(std::span<const std::pair<complex, TwoPhotonState>>(terms.begin(), terms.size()));
}

BellFractions bell_fractions(const TwoPhotonState& state) {
  if (state.paths() != PathSet::input) {
    throw std::invalid_argument("Bell fractions are defined on the input paths only");
  }
  BellFractions f;
  for (BellKind k : kBellKinds) {
    f.values[static_cast<std::size_t>(k)] = std::norm(inner_product(make_bell(k), state));
  }
  return f;
}

bool equal_up_to_phase(const TwoPhotonState& x, const TwoPhotonState& y, double tol) {
  if (x.paths() != y.paths()) return false;
  const double nx = std::sqrt(x.norm_squared());
  const double ny = std::sqrt(y.norm_squared());
  if (std::abs(nx - ny) > tol) return false;
  return std::abs(std::abs(inner_product(x, y)) - nx * ny) <= tol;
}

std::string to_text(const TwoPhotonState& state) {
  std::string out;
  for (const auto& [pair, amp] : state.amplitudes()) {
    if (amp == complex{}) continue;
    out += to_string(pair.first().path);
    out += ' ';
    out += to_string(pair.first().pol);
    out += ' ';
    out += to_string(pair.second().path);
    out += ' ';
    out += to_string(pair.second().pol);
    out += ' ' + format_double(amp.real()) + ' ' + format_double(amp.imag()) + '\n';
  }
  return out;
}

TwoPhotonState state_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<TwoPhotonState> state;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream row(line);
    std::string p1, s1, p2, s2;
    double re = 0, im = 0;
    if (!(row >> p1 >> s1 >> p2 >> s2 >> re >> im)) {
      throw std::invalid_argument("state text line " + std::to_string(lineno) + ": expected 'path pol path pol re im'");
    }
    auto path1 = parse_path(p1), path2 = parse_path(p2);
    auto pol1 = parse_pol(s1), pol2 = parse_pol(s2);
    if (!path1 || !path2 || !pol1 || !pol2) {
      throw std::invalid_argument("state text line " + std::to_string(lineno) + ": unknown mode label");
    }
    const PathSet set = contains(PathSet::input, *path1) ? PathSet::input : PathSet::output;
    if (!state) state.emplace(set);
    state->set_amplitude(Mode{*path1, *pol1}, Mode{*path2, *pol2}, complex{re, im});
  }
  return state ? *state : TwoPhotonState{};
}

}  // namespace biphoton
