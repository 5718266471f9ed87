#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "biphoton/cli/runner.hpp"

using namespace biphoton;
using namespace biphoton::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(seed: 1
apparatus:
  source: PhiPlus
  filter:
    bandwidth: 10nm
    coherence_length: 59um
  acquisition:
    pair_rate: 11612/s
    efficiency: 0.2
scan:
  type: delay
  settings: {start: -150um, stop: 150um, step: 10um}
  duration: 5s
analysis:
  gaussian: [Hc:Hd]
  visibility: Hc:Hd
output:
  name: minimal
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("test setup: '" + from + "' not found");
  return text.replace(pos, from.size(), to);
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  throw std::logic_error("expected a ConfigError");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biphoton_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(BIPHOTON_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, BundledConfigsParse) {
  const auto ids = bundled_ids();
  ASSERT_EQ(ids.size(), 5u);
  for (const auto& id : ids) {
    EXPECT_NO_THROW(parse_config(*bundled_config(id))) << id;
  }
  EXPECT_FALSE(bundled_config("fig9"));
}

TEST(Config, Fig3Contents) {
  const ExperimentConfig c = parse_config(*bundled_config("fig3"));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.apparatus.acquisition.rng_seed, 3u);
  EXPECT_EQ(c.apparatus.filter.shape, FilterShape::rectangular);
  EXPECT_NEAR(c.apparatus.filter.bandwidth_nm, 30.0, 1e-12);
  EXPECT_NEAR(c.apparatus.filter.center_nm, 810.0, 1e-12);
  EXPECT_NEAR(*c.apparatus.filter.coherence_length_um, 20.0, 1e-12);
  const BellFractions f = bell_fractions(c.apparatus.source);
  EXPECT_NEAR(f[BellKind::PhiPlus], 0.82, 1e-12);
  EXPECT_NEAR(f[BellKind::PhiMinus], 0.15, 1e-12);
  EXPECT_NEAR(f[BellKind::PsiPlus], 0.03, 1e-12);
  EXPECT_EQ(c.scan.type, ScanType::delay);
  EXPECT_EQ(c.scan.settings.size(), 81u);
  EXPECT_NEAR(c.apparatus.acquisition.duration, 50.0, 1e-12);
  EXPECT_NEAR(c.apparatus.acquisition.coincidence_window, 5e-9, 1e-20);
  ASSERT_TRUE(c.analysis.bell_fractions);
  EXPECT_EQ(c.output.name, "fig3");
}

TEST(Config, NegativeBandwidthIsRangeErrorWithLine) {
  const ConfigError e = config_error(replace(kMinimal, "bandwidth: 10nm", "bandwidth: -10nm"));
  EXPECT_EQ(e.kind(), ConfigError::Kind::range);
  EXPECT_EQ(e.line(), 5);
  EXPECT_NE(std::string(e.what()).find("bandwidth"), std::string::npos);
}

TEST(Config, UnknownScanTypeListsValidTypes) {
  const ConfigError e = config_error(replace(kMinimal, "type: delay", "type: wavelength"));
  EXPECT_EQ(e.kind(), ConfigError::Kind::schema);
  EXPECT_EQ(e.line(), 11);
  const std::string msg = e.what();
  for (const char* t : {"delay", "hwp", "field"}) EXPECT_NE(msg.find(t), std::string::npos) << msg;
}

TEST(Config, UnknownKeyIsReportedWithLine) {
  const ConfigError e = config_error(replace(kMinimal, "  efficiency: 0.2", "  efficency: 0.2"));
  EXPECT_EQ(e.kind(), ConfigError::Kind::schema);
  EXPECT_EQ(e.line(), 9);
  EXPECT_NE(std::string(e.what()).find("efficency"), std::string::npos);
}

TEST(Config, SyntaxError) {
  const ConfigError e = config_error("apparatus: {source: PhiPlus\n");
  EXPECT_EQ(e.kind(), ConfigError::Kind::syntax);
}

TEST(Config, MissingAndMismatchedSections) {
  EXPECT_EQ(config_error(replace(kMinimal, "    pair_rate: 11612/s\n", "")).kind(), ConfigError::Kind::schema);
  // A HWP-only analysis on a delay scan.
  EXPECT_EQ(config_error(replace(kMinimal, "  visibility: Hc:Hd", "  sin2: [Hc:Hd]")).kind(),
            ConfigError::Kind::schema);
  EXPECT_EQ(config_error(replace(kMinimal, "efficiency: 0.2", "efficiency: 1.2")).kind(), ConfigError::Kind::range);
  EXPECT_EQ(config_error(replace(kMinimal, "pair_rate: 11612/s", "pair_rate: 11612um")).kind(),
            ConfigError::Kind::schema);
}

TEST(Config, Quantities) {
  EXPECT_DOUBLE_EQ(parse_quantity("59um", Quantity::length_um), 59.0);
  EXPECT_DOUBLE_EQ(parse_quantity("10 mm", Quantity::length_um), 1e4);
  EXPECT_DOUBLE_EQ(parse_quantity("810nm", Quantity::length_um), 0.81);
  EXPECT_DOUBLE_EQ(parse_quantity("5ns", Quantity::time_s), 5e-9);
  EXPECT_NEAR(parse_quantity("0.5rad", Quantity::angle_deg), 0.5 * 180.0 / M_PI, 1e-12);
  EXPECT_DOUBLE_EQ(parse_quantity("250mT", Quantity::field_tesla), 0.25);
  EXPECT_DOUBLE_EQ(parse_quantity("2kHz", Quantity::rate_hz), 2000.0);
  EXPECT_DOUBLE_EQ(parse_quantity("-71rad/T/m", Quantity::verdet), -71.0);
  EXPECT_DOUBLE_EQ(parse_quantity("45", Quantity::angle_deg), 45.0);
  EXPECT_THROW(parse_quantity("5 parsecs", Quantity::length_um), std::invalid_argument);
  EXPECT_THROW(parse_quantity("fast", Quantity::time_s), std::invalid_argument);
}

TEST(ScanIo, CsvRoundTrip) {
  const ExperimentConfig c = parse_config(kMinimal);
  const ScanResult scan = run_delay_scan(c.apparatus, c.scan.settings);
  std::stringstream io;
  write_scan_csv(io, scan, {{"field", "0.5"}});
  const ScanFile back = read_scan_csv(io);
  EXPECT_EQ(back.scan.rows, scan.rows);
  EXPECT_EQ(back.scan.variable, "delay");
  EXPECT_EQ(back.scan.units, "um");
  EXPECT_EQ(back.scan.seed, scan.seed);
  EXPECT_EQ(back.metadata.at("field"), "0.5");

  std::istringstream bad(csv_header() + "\n1,2,3\n");
  EXPECT_THROW(read_scan_csv(bad), std::runtime_error);
}

TEST(Runner, RerunsAreByteIdentical) {
  ExperimentConfig c = parse_config(kMinimal);
  RunOptions o1, o2;
  o1.out_dir = temp_dir("rerun1").string();
  o2.out_dir = temp_dir("rerun2").string();
  run(c, o1);
  run(c, o2);
  for (const char* f : {"minimal.csv", "minimal_fits.txt"}) {
    EXPECT_EQ(slurp(fs::path(*o1.out_dir) / f), slurp(fs::path(*o2.out_dir) / f)) << f;
  }
  RunOptions o3 = o1;
  o3.seed = 99;
  o3.out_dir = temp_dir("rerun3").string();
  run(c, o3);
  EXPECT_NE(slurp(fs::path(*o1.out_dir) / "minimal.csv"), slurp(fs::path(*o3.out_dir) / "minimal.csv"));
}

TEST(Runner, FitOfWrittenDataMatchesSimulation) {
  const ExperimentConfig c = parse_config(kMinimal);
  RunOptions o;
  o.out_dir = temp_dir("refit").string();
  const RunReport sim = run(c, o);
  ASSERT_EQ(sim.exit_code(), kExitOk);
  const std::vector<std::string> data{(fs::path(*o.out_dir) / "minimal.csv").string()};
  const RunReport refit = analyze(c, load_scans(c, data, std::nullopt));
  EXPECT_DOUBLE_EQ(refit.summary["visibility"]["value"].get<double>(),
                   sim.summary["visibility"]["value"].get<double>());
}

TEST(Runner, Fig6VerdetWithinTolerance) {
  RunOptions o;
  o.out_dir = temp_dir("fig6").string();
  o.quiet = true;
  const RunReport r = run(parse_config(*bundled_config("fig6")), o);
  EXPECT_EQ(r.exit_code(), kExitOk);
  const double v = r.summary["verdet"]["value"].get<double>();
  EXPECT_NEAR(v, -71.0, 2.2);
  EXPECT_TRUE(r.summary["verdet"]["within_tolerance"].get<bool>());
  EXPECT_TRUE(fs::exists(fs::path(*o.out_dir) / "fig6_calibration.csv"));
  EXPECT_TRUE(fs::exists(fs::path(*o.out_dir) / "fig6_field10.csv"));
}

TEST(Tool, CountCoincidences) {
  const fs::path dir = temp_dir("count");
  AcquisitionConfig acq;
  acq.pair_rate = 5e4;
  acq.duration = 0.2;
  acq.efficiency = {0.3, 0.3, 0.3, 0.3};
  acq.dark_rate = {500, 500, 500, 500};
  acq.rng_seed = 4;
  const auto probs = coincidence_probabilities_at_kernel(make_bell(BellKind::PsiPlus), {}, 0.5);
  const TimestampStreams streams = generate_timestamps(probs, acq);
  {
    std::ofstream out(dir / "events.tsv");
    write_timestamps(out, streams);
  }
  ASSERT_EQ(run_tool("count-coincidences " + (dir / "events.tsv").string() + " --window 5ns --quiet --out-dir " +
                     dir.string()),
            0);
  const auto j = nlohmann::json::parse(slurp(dir / "counts.json"));
  EXPECT_EQ(j, to_json(count_coincidences(streams, 5e-9)));
}

TEST(Tool, ExitCodes) {
  const fs::path dir = temp_dir("exit");
  {
    std::ofstream out(dir / "bad.yaml");
    out << replace(kMinimal, "bandwidth: 10nm", "bandwidth: -10nm");
  }
  EXPECT_EQ(run_tool("simulate --config " + (dir / "bad.yaml").string() + " --out-dir " + dir.string()), 1);
  {
    std::ofstream out(dir / "ok.yaml");
    out << kMinimal;
  }
  EXPECT_EQ(run_tool("simulate --config " + (dir / "ok.yaml").string() + " --quiet --out-dir " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "minimal.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_EQ(run_tool("fit --config " + (dir / "ok.yaml").string() + " --data " + (dir / "minimal.csv").string() +
                     " --quiet --out-dir " + (dir / "refit").string()),
            0);
  EXPECT_EQ(run_tool("reproduce fig2 --print-config"), 0);
  EXPECT_NE(run_tool("reproduce fig9"), 0);
}
