#include "biphoton/cli/scan_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace biphoton::cli {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void bad(int lineno, const std::string& what) {
  throw std::runtime_error("scan file line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

std::string csv_header() {
  std::string h = "setting";
  for (Channel ch : kChannels) h += "," + std::string(to_string(ch));
  for (Detector d : kDetectors) h += ",singles_" + std::string(to_string(d));
  return h;
}

void write_scan_csv(std::ostream& out, const ScanResult& scan, const std::map<std::string, std::string>& metadata) {
  out << "# variable: " << scan.variable << "\n";
  out << "# units: " << scan.units << "\n";
  out << "# seed: " << scan.seed << "\n";
  for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
  out << csv_header() << "\n";
  for (const auto& row : scan.rows) {
    out << g17(row.setting);
    for (auto c : row.counts.coincidences) out << ',' << c;
    for (auto s : row.counts.singles) out << ',' << s;
    out << "\n";
  }
}

ScanFile read_scan_csv(std::istream& in) {
  ScanFile file;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = strip(line.substr(1, colon - 1));
      const std::string value = strip(line.substr(colon + 1));
      if (key == "variable") {
        file.scan.variable = value;
      } else if (key == "units") {
        file.scan.units = value;
      } else if (key == "seed") {
        file.scan.seed = std::stoull(value);
      } else {
        file.metadata[key] = value;
      }
      continue;
    }
    if (!have_header) {
      if (line != csv_header()) bad(lineno, "expected header '" + csv_header() + "'");
      have_header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 11) bad(lineno, "expected 11 columns, found " + std::to_string(cells.size()));
    ScanRow row;
    {
      const auto& s = cells[0];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), row.setting);
      if (ec != std::errc{} || p != s.data() + s.size()) bad(lineno, "bad setting '" + s + "'");
    }
    for (std::size_t i = 1; i < cells.size(); ++i) {
      std::int64_t v = 0;
      const auto& s = cells[i];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size() || v < 0) bad(lineno, "bad count '" + s + "'");
      if (i <= 6) {
        row.counts.coincidences[i - 1] = v;
      } else {
        row.counts.singles[i - 7] = v;
      }
    }
    file.scan.rows.push_back(row);
  }
  if (!have_header) throw std::runtime_error("scan file has no header line");
  if (file.scan.rows.empty()) throw std::runtime_error("scan file has no data rows");
  return file;
}

nlohmann::json to_json(const ChannelCounts& counts) {
  nlohmann::json j;
  for (Channel ch : kChannels) j[std::string(to_string(ch))] = counts[ch];
  nlohmann::json s;
  for (Detector d : kDetectors) s[std::string(to_string(d))] = counts.singles_at(d);
  j["singles"] = s;
  return j;
}

nlohmann::json to_json(const ScanResult& scan, const std::map<std::string, std::string>& metadata) {
  nlohmann::json j;
  j["variable"] = scan.variable;
  j["units"] = scan.units;
  j["seed"] = scan.seed;
  if (!metadata.empty()) j["metadata"] = metadata;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : scan.rows) rows.push_back({{"setting", r.setting}, {"counts", to_json(r.counts)}});
  j["rows"] = rows;
  return j;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j;
  j["model"] = fit.model;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["chi2"] = fit.residual_sum_squares;
  j["message"] = fit.message;
  for (const auto& name : fit.names) {
    const double err = fit.error(name);
    j["parameters"][name] = {{"value", fit.value(name)}, {"error", std::isfinite(err) ? nlohmann::json(err) : nlohmann::json(nullptr)}};
  }
  return j;
}

nlohmann::json to_json(const BellFractionEstimate& est) {
  nlohmann::json j;
  for (BellKind k : kBellKinds) j["fractions"][std::string(to_string(k))] = est[k];
  j["method"] = est.method;
  j["indistinguishability"] = est.indistinguishability;
  j["residual_dip_fraction"] = est.residual_dip_fraction;
  j["clamped"] = est.clamped;
  j["warnings"] = est.warnings;
  return j;
}

std::string counts_table(const ChannelCounts& counts) {
  std::string out;
  char buf[64];
  for (Channel ch : kChannels) {
    std::snprintf(buf, sizeof buf, "%-8s %12lld\n", std::string(to_string(ch)).c_str(),
                  static_cast<long long>(counts[ch]));
    out += buf;
  }
  for (Detector d : kDetectors) {
    std::snprintf(buf, sizeof buf, "%-8s %12lld\n", ("n_" + std::string(to_string(d))).c_str(),
                  static_cast<long long>(counts.singles_at(d)));
    out += buf;
  }
  return out;
}

}  // namespace biphoton::cli
