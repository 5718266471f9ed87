#include "biphoton/cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace biphoton::cli {

ConfigError::ConfigError(Kind kind, std::string message, int line, int column)
    : std::runtime_error([&] {
        std::string out = std::string(to_string(kind)) + " error";
        if (line > 0) out += " at line " + std::to_string(line) + ", column " + std::to_string(column);
        return out + ": " + message;
      }()),
      kind_(kind),
      line_(line),
      column_(column) {}

std::string_view to_string(ConfigError::Kind kind) {
  switch (kind) {
    case ConfigError::Kind::syntax: return "syntax";
    case ConfigError::Kind::schema: return "schema";
    case ConfigError::Kind::range: return "range";
  }
  return "config";
}

std::string_view to_string(ScanType t) {
  switch (t) {
    case ScanType::delay: return "delay";
    case ScanType::hwp: return "hwp";
    case ScanType::field: return "field";
  }
  return "?";
}

namespace {

struct Unit {
  std::string_view suffix;
  double factor;
};

// Suffix tables; the first entry of each is the canonical unit.
const std::vector<Unit>& units_for(Quantity q) {
  static const std::vector<Unit> length{{"um", 1.0}, {"µm", 1.0}, {"nm", 1e-3}, {"mm", 1e3}, {"cm", 1e4}, {"m", 1e6}};
  static const std::vector<Unit> time{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6},
                                      {"ns", 1e-9}, {"ps", 1e-12}, {"fs", 1e-15}, {"min", 60.0}};
  static const std::vector<Unit> angle{{"deg", 1.0}, {"°", 1.0}, {"rad", 180.0 / std::numbers::pi},
                                       {"mrad", 0.18 / std::numbers::pi}};
  static const std::vector<Unit> field{{"T", 1.0}, {"mT", 1e-3}, {"G", 1e-4}};
  static const std::vector<Unit> rate{{"/s", 1.0}, {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"1/s", 1.0}};
  static const std::vector<Unit> verdet{{"rad/T/m", 1.0}, {"rad/(T m)", 1.0}, {"rad/(T*m)", 1.0}};
  static const std::vector<Unit> none{{"", 1.0}, {"%", 0.01}};
  switch (q) {
    case Quantity::length_um: return length;
    case Quantity::time_s: return time;
    case Quantity::angle_deg: return angle;
    case Quantity::field_tesla: return field;
    case Quantity::rate_hz: return rate;
    case Quantity::verdet: return verdet;
    case Quantity::dimensionless: return none;
  }
  return none;
}

std::string_view quantity_name(Quantity q) {
  switch (q) {
    case Quantity::length_um: return "a length such as '59um'";
    case Quantity::time_s: return "a time such as '5ns'";
    case Quantity::angle_deg: return "an angle such as '45deg'";
    case Quantity::field_tesla: return "a field such as '0.1T'";
    case Quantity::rate_hz: return "a rate such as '1e4/s'";
    case Quantity::verdet: return "a Verdet constant in rad/T/m";
    case Quantity::dimensionless: return "a number";
  }
  return "a number";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_quantity(std::string_view text, Quantity q) {
  const std::string_view t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr == t.data()) {
    throw std::invalid_argument("'" + std::string(text) + "' is not " + std::string(quantity_name(q)));
  }
  const std::string_view suffix = trim(std::string_view(ptr, static_cast<std::size_t>(t.data() + t.size() - ptr)));
  if (suffix.empty()) return value;
  for (const auto& u : units_for(q)) {
    if (u.suffix == suffix) return value * u.factor;
  }
  std::string valid;
  for (const auto& u : units_for(q)) {
    if (u.suffix.empty()) continue;
    valid += (valid.empty() ? "" : ", ") + std::string(u.suffix);
  }
  throw std::invalid_argument("unknown unit '" + std::string(suffix) + "' in '" + std::string(text) +
                              "' (expected " + valid + ")");
}

namespace {

using Kind = ConfigError::Kind;

[[noreturn]] void fail(Kind kind, const YAML::Node& node, const std::string& message) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) throw ConfigError(kind, message);
  throw ConfigError(kind, message, m.line + 1, m.column + 1);
}

std::string join(std::initializer_list<std::string_view> items) {
  std::string out;
  for (auto s : items) out += (out.empty() ? "" : ", ") + std::string(s);
  return out;
}

void require_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) fail(Kind::schema, node, "'" + path + "' must be a mapping");
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<std::string_view> allowed) {
  require_map(node, path);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(Kind::schema, kv.first,
           "unknown key '" + key + "' in '" + path + "' (allowed: " + join(allowed) + ")");
    }
  }
}

std::string scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) fail(Kind::schema, node, "'" + path + "' must be a scalar");
  return node.Scalar();
}

double quantity(const YAML::Node& node, const std::string& path, Quantity q) {
  try {
    return parse_quantity(scalar(node, path), q);
  } catch (const std::invalid_argument& e) {
    fail(Kind::schema, node, "'" + path + "': " + e.what());
  }
}

double positive(const YAML::Node& node, const std::string& path, Quantity q) {
  const double v = quantity(node, path, q);
  if (!(v > 0.0)) fail(Kind::range, node, "'" + path + "' must be > 0");
  return v;
}

double non_negative(const YAML::Node& node, const std::string& path, Quantity q) {
  const double v = quantity(node, path, q);
  if (!(v >= 0.0)) fail(Kind::range, node, "'" + path + "' must be >= 0");
  return v;
}

bool boolean(const YAML::Node& node, const std::string& path) {
  const std::string s = scalar(node, path);
  if (s == "true" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "no" || s == "off") return false;
  fail(Kind::schema, node, "'" + path + "' must be true or false");
}

Channel channel(const YAML::Node& node, const std::string& path) {
  const std::string s = scalar(node, path);
  if (auto ch = parse_channel(s)) return *ch;
  fail(Kind::schema, node,
       "'" + path + "': unknown channel '" + s + "' (valid: Hc:Hd, Hc:Vd, Vc:Hd, Vc:Vd, Hc:Vc, Hd:Vd)");
}

std::vector<Channel> channel_list(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar() && node.Scalar() == "all") return {kChannels.begin(), kChannels.end()};
  if (node.IsScalar()) return {channel(node, path)};
  if (!node.IsSequence()) fail(Kind::schema, node, "'" + path + "' must be a channel list or 'all'");
  std::vector<Channel> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(channel(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// A list of quantities or {start, stop, step}.
std::vector<double> settings(const YAML::Node& node, const std::string& path, Quantity q) {
  std::vector<double> out;
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(quantity(node[i], path + "[" + std::to_string(i) + "]", q));
  } else if (node.IsMap()) {
    check_keys(node, path, {"start", "stop", "step"});
    for (auto key : {"start", "stop", "step"}) {
      if (!node[key]) fail(Kind::schema, node, "'" + path + "' range needs '" + key + "'");
    }
    const double start = quantity(node["start"], path + ".start", q);
    const double stop = quantity(node["stop"], path + ".stop", q);
    const double step = quantity(node["step"], path + ".step", q);
    if (step == 0.0 || (stop - start) / step < 0.0) {
      fail(Kind::range, node["step"], "'" + path + ".step' must be nonzero and point from start to stop");
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 1'000'000) fail(Kind::range, node, "'" + path + "' expands to more than 10^6 points");
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    fail(Kind::schema, node, "'" + path + "' must be a list or a {start, stop, step} range");
  }
  if (out.empty()) fail(Kind::range, node, "'" + path + "' is empty");
  const bool up = out.size() < 2 || out[1] > out[0];
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (up ? !(out[i] > out[i - 1]) : !(out[i] < out[i - 1])) {
      fail(Kind::range, node, "'" + path + "' must be strictly monotone");
    }
  }
  return out;
}

// Scalar applies to all four detectors; a list gives Hc, Vc, Hd, Vd; a map names detectors.
std::array<double, 4> per_detector(const YAML::Node& node, const std::string& path, Quantity q, double lo, double hi) {
  std::array<double, 4> out{};
  auto check = [&](const YAML::Node& n, const std::string& p) {
    const double v = quantity(n, p, q);
    if (!(v >= lo && v <= hi)) {
      fail(Kind::range, n, "'" + p + "' must lie in [" + std::to_string(lo) + ", " + (std::isinf(hi) ? "inf" : std::to_string(hi)) + "]");
    }
    return v;
  };
  if (node.IsScalar()) {
    out.fill(check(node, path));
  } else if (node.IsSequence()) {
    if (node.size() != 4) fail(Kind::schema, node, "'" + path + "' needs 4 values (Hc, Vc, Hd, Vd)");
    for (std::size_t i = 0; i < 4; ++i) out[i] = check(node[i], path + "[" + std::to_string(i) + "]");
  } else if (node.IsMap()) {
    check_keys(node, path, {"Hc", "Vc", "Hd", "Vd"});
    for (Detector d : kDetectors) {
      const std::string key(to_string(d));
      if (!node[key]) fail(Kind::schema, node, "'" + path + "' is missing detector '" + key + "'");
      out[static_cast<std::size_t>(d)] = check(node[key], path + "." + key);
    }
  } else {
    fail(Kind::schema, node, "'" + path + "' must be a number, a 4-list or a detector map");
  }
  return out;
}

complex matrix_entry(const YAML::Node& node, const std::string& path) {
  if (node.IsSequence()) {
    if (node.size() != 2) fail(Kind::schema, node, "'" + path + "' complex entries are [re, im]");
    return {quantity(node[0], path + "[0]", Quantity::dimensionless), quantity(node[1], path + "[1]", Quantity::dimensionless)};
  }
  return {quantity(node, path, Quantity::dimensionless), 0.0};
}

OpticalElement element(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"type", "name", "angle", "phase", "axis", "matrix", "extra_path", "extra_path_H", "extra_path_V"});
  if (!node["type"]) fail(Kind::schema, node, "'" + path + "' needs a 'type'");
  const std::string type = scalar(node["type"], path + ".type");
  auto angle = [&](const char* key) {
    if (!node[key]) fail(Kind::schema, node, "'" + path + "' of type " + type + " needs '" + key + "'");
    return Angle::degrees(quantity(node[key], path + "." + key, Quantity::angle_deg));
  };
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (node[k]) fail(Kind::schema, node[k], "'" + path + "." + k + "' does not apply to type " + type);
    }
  };

  OpticalElement e;
  e.name = type;
  if (type == "identity" || type == "plate") {
    forbid({"angle", "phase", "axis", "matrix"});
  } else if (type == "rotation") {
    forbid({"phase", "axis", "matrix"});
    e.jones = rotation(angle("angle"));
  } else if (type == "faraday") {
    forbid({"phase", "axis", "matrix"});
    e.jones = faraday(angle("angle"));
  } else if (type == "hwp") {
    forbid({"phase", "axis", "matrix"});
    e.jones = hwp(angle("angle"));
  } else if (type == "qwp") {
    forbid({"phase", "axis", "matrix"});
    e.jones = qwp(angle("angle"));
  } else if (type == "retarder") {
    forbid({"angle", "matrix"});
    e.jones = retarder(angle("phase"), angle("axis"));
  } else if (type == "custom") {
    forbid({"angle", "phase", "axis"});
    const YAML::Node m = node["matrix"];
    if (!m || !m.IsSequence() || m.size() != 2 || !m[0].IsSequence() || !m[1].IsSequence() || m[0].size() != 2 ||
        m[1].size() != 2) {
      fail(Kind::schema, m ? m : node, "'" + path + ".matrix' must be [[a, b], [c, d]]");
    }
    e.jones = {matrix_entry(m[0][0], path + ".matrix[0][0]"), matrix_entry(m[0][1], path + ".matrix[0][1]"),
               matrix_entry(m[1][0], path + ".matrix[1][0]"), matrix_entry(m[1][1], path + ".matrix[1][1]")};
    if (!e.jones.is_unitary(1e-9)) fail(Kind::range, m, "'" + path + ".matrix' is not unitary; lossy elements are not supported");
  } else {
    fail(Kind::schema, node["type"],
         "'" + path + ".type': unknown element '" + type +
             "' (valid: identity, plate, rotation, faraday, hwp, qwp, retarder, custom)");
  }
  if (node["name"]) e.name = scalar(node["name"], path + ".name");
  if (node["extra_path"]) {
    e.extra_path_h_um = e.extra_path_v_um = non_negative(node["extra_path"], path + ".extra_path", Quantity::length_um);
  }
  if (node["extra_path_H"]) e.extra_path_h_um = non_negative(node["extra_path_H"], path + ".extra_path_H", Quantity::length_um);
  if (node["extra_path_V"]) e.extra_path_v_um = non_negative(node["extra_path_V"], path + ".extra_path_V", Quantity::length_um);
  return e;
}

std::vector<OpticalElement> arm(const YAML::Node& node, const std::string& path) {
  if (node.IsNull()) return {};
  if (!node.IsSequence()) fail(Kind::schema, node, "'" + path + "' must be a list of elements");
  std::vector<OpticalElement> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(element(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

BellKind bell_kind(const YAML::Node& node, const std::string& path) {
  const std::string s = scalar(node, path);
  if (auto k = parse_bell_kind(s)) return *k;
  fail(Kind::schema, node, "'" + path + "': unknown Bell state '" + s + "' (valid: PhiPlus, PhiMinus, PsiPlus, PsiMinus)");
}

TwoPhotonState source(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) return make_bell(bell_kind(node, path));
  check_keys(node, path, {"bell", "fractions", "phases"});
  if (node["bell"] && node["fractions"]) fail(Kind::schema, node, "'" + path + "' takes either 'bell' or 'fractions'");
  if (node["bell"] && node["phases"]) fail(Kind::schema, node["phases"], "'" + path + ".phases' needs 'fractions'");
  if (node["bell"]) return make_bell(bell_kind(node["bell"], path + ".bell"));
  if (!node["fractions"]) fail(Kind::schema, node, "'" + path + "' needs 'bell' or 'fractions'");
  const YAML::Node f = node["fractions"];
  check_keys(f, path + ".fractions", {"PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus"});
  std::array<double, 4> w{};
  double total = 0.0;
  for (BellKind k : kBellKinds) {
    const std::string key(to_string(k));
    if (f[key]) {
      const double v = quantity(f[key], path + ".fractions." + key, Quantity::dimensionless);
      if (!(v >= 0.0 && v <= 1.0)) fail(Kind::range, f[key], "'" + path + ".fractions." + key + "' must lie in [0, 1]");
      w[static_cast<std::size_t>(k)] = v;
      total += v;
    }
  }
  if (!(total > 0.0)) fail(Kind::range, f, "'" + path + ".fractions' must not all be zero");
  if (std::abs(total - 1.0) > 1e-6) fail(Kind::range, f, "'" + path + ".fractions' must sum to 1");
  if (!node["phases"]) return source_from_fractions(w);

  const YAML::Node ph = node["phases"];
  check_keys(ph, path + ".phases", {"PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus"});
  TwoPhotonState s(PathSet::input);
  for (BellKind k : kBellKinds) {
    const std::string key(to_string(k));
    const double phase = ph[key] ? Angle::degrees(quantity(ph[key], path + ".phases." + key, Quantity::angle_deg)).radians() : 0.0;
    s += std::polar(std::sqrt(w[static_cast<std::size_t>(k)]), phase) * make_bell(k);
  }
  return s.normalize();
}

SpectralFilter filter(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"shape", "center", "bandwidth", "coherence_length"});
  SpectralFilter f;
  if (node["shape"]) {
    const std::string s = scalar(node["shape"], path + ".shape");
    auto shape = parse_filter_shape(s);
    if (!shape) fail(Kind::schema, node["shape"], "'" + path + ".shape': unknown shape '" + s + "' (valid: gaussian, rectangular)");
    f.shape = *shape;
  }
  // Filter wavelengths are written in nm; convert from the um-based length table.
  if (node["center"]) f.center_nm = positive(node["center"], path + ".center", Quantity::length_um) * 1e3;
  if (node["bandwidth"]) f.bandwidth_nm = positive(node["bandwidth"], path + ".bandwidth", Quantity::length_um) * 1e3;
  if (node["coherence_length"]) f.coherence_length_um = positive(node["coherence_length"], path + ".coherence_length", Quantity::length_um);
  return f;
}

AcquisitionConfig acquisition(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"pair_rate", "duration", "efficiency", "dark_rate", "window", "jitter", "accidentals"});
  AcquisitionConfig a;
  if (!node["pair_rate"]) fail(Kind::schema, node, "'" + path + "' needs 'pair_rate'");
  a.pair_rate = non_negative(node["pair_rate"], path + ".pair_rate", Quantity::rate_hz);
  if (node["duration"]) a.duration = positive(node["duration"], path + ".duration", Quantity::time_s);
  if (node["efficiency"]) a.efficiency = per_detector(node["efficiency"], path + ".efficiency", Quantity::dimensionless, 0.0, 1.0);
  if (node["dark_rate"]) {
    a.dark_rate = per_detector(node["dark_rate"], path + ".dark_rate", Quantity::rate_hz, 0.0, std::numeric_limits<double>::infinity());
  }
  if (node["window"]) a.coincidence_window = positive(node["window"], path + ".window", Quantity::time_s);
  if (node["jitter"]) a.jitter = non_negative(node["jitter"], path + ".jitter", Quantity::time_s);
  if (node["accidentals"]) a.model_accidentals = boolean(node["accidentals"], path + ".accidentals");
  return a;
}

Apparatus apparatus(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"source", "arm_a", "arm_b", "filter", "mode_overlap", "acquisition"});
  Apparatus app;
  if (node["source"]) app.source = source(node["source"], path + ".source");
  if (node["arm_a"]) app.arm_a = arm(node["arm_a"], path + ".arm_a");
  if (node["arm_b"]) app.arm_b = arm(node["arm_b"], path + ".arm_b");
  if (node["filter"]) app.filter = filter(node["filter"], path + ".filter");
  if (node["mode_overlap"]) {
    app.mode_overlap = quantity(node["mode_overlap"], path + ".mode_overlap", Quantity::dimensionless);
    if (!(app.mode_overlap >= 0.0 && app.mode_overlap <= 1.0)) {
      fail(Kind::range, node["mode_overlap"], "'" + path + ".mode_overlap' must lie in [0, 1]");
    }
  }
  if (!node["acquisition"]) fail(Kind::schema, node, "'" + path + "' needs an 'acquisition' block");
  app.acquisition = acquisition(node["acquisition"], path + ".acquisition");
  return app;
}

FaradaySample sample(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"verdet", "length", "extra_path"});
  if (!node["verdet"]) fail(Kind::schema, node, "'" + path + "' needs 'verdet'");
  FaradaySample s;
  s.verdet = quantity(node["verdet"], path + ".verdet", Quantity::verdet);
  if (node["length"]) s.length_m = positive(node["length"], path + ".length", Quantity::length_um) * 1e-6;
  if (node["extra_path"]) s.extra_path_um = non_negative(node["extra_path"], path + ".extra_path", Quantity::length_um);
  return s;
}

ScanSpec scan(const YAML::Node& node, const std::string& path, AcquisitionConfig& acq) {
  check_keys(node, path, {"type", "settings", "at_delay", "delays", "duration", "sample", "calibration"});
  if (!node["type"]) fail(Kind::schema, node, "'" + path + "' needs a 'type'");
  ScanSpec s;
  const std::string type = scalar(node["type"], path + ".type");
  if (type == "delay") {
    s.type = ScanType::delay;
  } else if (type == "hwp") {
    s.type = ScanType::hwp;
  } else if (type == "field") {
    s.type = ScanType::field;
  } else {
    fail(Kind::schema, node["type"], "'" + path + ".type': unknown scan type '" + type + "' (valid: delay, hwp, field)");
  }
  if (!node["settings"]) fail(Kind::schema, node, "'" + path + "' needs 'settings'");
  const Quantity q = s.type == ScanType::delay ? Quantity::length_um
                     : s.type == ScanType::hwp ? Quantity::angle_deg
                                               : Quantity::field_tesla;
  s.settings = settings(node["settings"], path + ".settings", q);

  auto only_for = [&](const char* key, ScanType t) {
    if (node[key] && s.type != t) {
      fail(Kind::schema, node[key], "'" + path + "." + key + "' applies only to " + std::string(to_string(t)) + " scans");
    }
  };
  only_for("at_delay", ScanType::hwp);
  only_for("delays", ScanType::field);
  only_for("sample", ScanType::field);
  only_for("calibration", ScanType::field);
  if (node["at_delay"]) s.at_delay_um = quantity(node["at_delay"], path + ".at_delay", Quantity::length_um);
  if (node["duration"]) acq.duration = positive(node["duration"], path + ".duration", Quantity::time_s);
  if (s.type == ScanType::field) {
    if (!node["delays"]) fail(Kind::schema, node, "'" + path + "' of type field needs 'delays'");
    if (!node["sample"]) fail(Kind::schema, node, "'" + path + "' of type field needs 'sample'");
    s.delays_um = settings(node["delays"], path + ".delays", Quantity::length_um);
    s.sample = sample(node["sample"], path + ".sample");
    if (node["calibration"]) {
      const YAML::Node c = node["calibration"];
      check_keys(c, path + ".calibration", {"angles"});
      if (!c["angles"]) fail(Kind::schema, c, "'" + path + ".calibration' needs 'angles'");
      s.calibration_angles_deg = settings(c["angles"], path + ".calibration.angles", Quantity::angle_deg);
    }
  }
  return s;
}

ChannelCounts counts(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"Hc:Hd", "Hc:Vd", "Vc:Hd", "Vc:Vd", "Hc:Vc", "Hd:Vd", "singles"});
  ChannelCounts c;
  auto integer = [&](const YAML::Node& n, const std::string& p) {
    const double v = non_negative(n, p, Quantity::dimensionless);
    if (v != std::floor(v)) fail(Kind::range, n, "'" + p + "' must be a whole count");
    return static_cast<std::int64_t>(v);
  };
  for (Channel ch : kChannels) {
    const std::string key(to_string(ch));
    if (!node[key]) fail(Kind::schema, node, "'" + path + "' is missing channel '" + key + "'");
    c.coincidences[static_cast<std::size_t>(ch)] = integer(node[key], path + "." + key);
  }
  if (node["singles"]) {
    const YAML::Node s = node["singles"];
    check_keys(s, path + ".singles", {"Hc", "Vc", "Hd", "Vd"});
    for (Detector d : kDetectors) {
      const std::string key(to_string(d));
      if (s[key]) c.singles[static_cast<std::size_t>(d)] = integer(s[key], path + ".singles." + key);
    }
  }
  return c;
}

BellSpec bell(const YAML::Node& node, const std::string& path) {
  BellSpec spec;
  if (node.IsScalar()) return spec;
  check_keys(node, path, {"hwp_delay", "subtract_accidentals", "hwp45_counts"});
  if (node["hwp_delay"]) spec.hwp_delay_um = quantity(node["hwp_delay"], path + ".hwp_delay", Quantity::length_um);
  if (node["subtract_accidentals"]) spec.subtract_accidentals = boolean(node["subtract_accidentals"], path + ".subtract_accidentals");
  if (node["hwp45_counts"]) spec.hwp45_counts = counts(node["hwp45_counts"], path + ".hwp45_counts");
  return spec;
}

AnalysisSpec analysis(const YAML::Node& node, const std::string& path, ScanType type) {
  check_keys(node, path, {"gaussian", "visibility", "coherence", "bell_fractions", "sin2", "verdet"});
  AnalysisSpec a;
  auto needs = [&](const char* key, std::initializer_list<ScanType> types, std::string_view what) {
    if (node[key] && std::find(types.begin(), types.end(), type) == types.end()) {
      fail(Kind::schema, node[key], "'" + path + "." + key + "' needs " + std::string(what));
    }
  };
  needs("gaussian", {ScanType::delay, ScanType::field}, "a delay or field scan");
  needs("visibility", {ScanType::delay}, "a delay scan");
  needs("coherence", {ScanType::delay}, "a delay scan");
  needs("bell_fractions", {ScanType::delay}, "a delay scan");
  needs("sin2", {ScanType::hwp}, "an hwp scan");
  needs("verdet", {ScanType::field}, "a field scan");

  if (node["gaussian"]) a.gaussian = channel_list(node["gaussian"], path + ".gaussian");
  if (node["visibility"]) a.visibility = channel(node["visibility"], path + ".visibility");
  if (node["coherence"]) a.coherence = channel(node["coherence"], path + ".coherence");
  if (node["sin2"]) a.sin2 = channel_list(node["sin2"], path + ".sin2");
  if (node["bell_fractions"]) {
    const YAML::Node b = node["bell_fractions"];
    if (!b.IsScalar() || boolean(b, path + ".bell_fractions")) a.bell_fractions = bell(b, path + ".bell_fractions");
  }
  if (node["verdet"]) {
    const YAML::Node v = node["verdet"];
    check_keys(v, path + ".verdet", {"channel", "sign", "fit_intercept", "expect", "tolerance"});
    VerdetSpec spec;
    if (v["channel"]) spec.channel = channel(v["channel"], path + ".verdet.channel");
    if (v["sign"]) {
      const std::string s = scalar(v["sign"], path + ".verdet.sign");
      if (s == "1" || s == "+1" || s == "+") {
        spec.sign = 1;
      } else if (s == "-1" || s == "-") {
        spec.sign = -1;
      } else {
        fail(Kind::range, v["sign"], "'" + path + ".verdet.sign' must be +1 or -1");
      }
    }
    if (v["fit_intercept"]) spec.fit_intercept = boolean(v["fit_intercept"], path + ".verdet.fit_intercept");
    if (v["expect"]) spec.expect = quantity(v["expect"], path + ".verdet.expect", Quantity::verdet);
    if (v["tolerance"]) spec.tolerance = non_negative(v["tolerance"], path + ".verdet.tolerance", Quantity::verdet);
    a.verdet = spec;
  }
  return a;
}

OutputSpec output(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"dir", "name", "format"});
  OutputSpec o;
  if (node["dir"]) o.dir = scalar(node["dir"], path + ".dir");
  if (node["name"]) {
    o.name = scalar(node["name"], path + ".name");
    if (o.name.empty() || o.name.find('/') != std::string::npos) {
      fail(Kind::range, node["name"], "'" + path + ".name' must be a plain file stem");
    }
  }
  if (node["format"]) {
    const std::string f = scalar(node["format"], path + ".format");
    if (f == "csv") {
      o.format = OutputFormat::csv;
    } else if (f == "json") {
      o.format = OutputFormat::json;
    } else {
      fail(Kind::schema, node["format"], "'" + path + ".format': unknown format '" + f + "' (valid: csv, json)");
    }
  }
  return o;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(Kind::syntax, e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) throw ConfigError(Kind::schema, "top level must be a mapping");
  check_keys(root, "<top>", {"seed", "apparatus", "scan", "analysis", "output"});
  if (!root["apparatus"]) throw ConfigError(Kind::schema, "missing required block 'apparatus'");
  if (!root["scan"]) throw ConfigError(Kind::schema, "missing required block 'scan'");

  ExperimentConfig cfg;
  if (root["seed"]) {
    const std::string s = scalar(root["seed"], "seed");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(Kind::range, root["seed"], "'seed' must be a non-negative integer");
    cfg.seed = v;
  }
  cfg.apparatus = apparatus(root["apparatus"], "apparatus");
  cfg.scan = scan(root["scan"], "scan", cfg.apparatus.acquisition);
  if (root["analysis"]) cfg.analysis = analysis(root["analysis"], "analysis", cfg.scan.type);
  if (root["output"]) cfg.output = output(root["output"], "output");
  if (cfg.analysis.verdet && cfg.scan.calibration_angles_deg.empty()) {
    fail(Kind::schema, root["analysis"]["verdet"], "'analysis.verdet' needs 'scan.calibration.angles'");
  }
  cfg.apparatus.acquisition.rng_seed = cfg.seed;
  try {
    cfg.apparatus.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(Kind::range, std::string("apparatus: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace biphoton::cli
