#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "biphoton/cli/runner.hpp"

namespace cli = biphoton::cli;

namespace {

std::optional<cli::OutputFormat> format_of(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s == "json" ? cli::OutputFormat::json : cli::OutputFormat::csv;
}

int finish(const cli::RunReport& rep, bool quiet) {
  if (!quiet) {
    std::cout << rep.fit_report;
    for (const auto& f : rep.files) std::cout << "wrote " << f << "\n";
  }
  for (const auto& f : rep.failures) std::cerr << "error: " << f << "\n";
  return rep.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polarization-resolved two-photon interference simulator and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format;
  std::uint64_t seed = 0;
  bool quiet = false;

  auto common = [&](CLI::App* sub, bool takes_config) {
    if (takes_config) sub->add_option("--config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_option("--format", format, "Scan data format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--quiet", quiet, "Only print errors");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate the configured scan, fit it and write outputs");
  common(simulate, true);

  auto* fit = app.add_subcommand("fit", "Analyse scan CSV files with the config's analysis block");
  common(fit, true);
  std::vector<std::string> data_paths;
  std::string calibration_path;
  fit->add_option("--data", data_paths, "Scan CSV file(s); one per field for field scans")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--calibration", calibration_path, "Rotation calibration CSV for Verdet fits")
      ->check(CLI::ExistingFile);

  auto* count = app.add_subcommand("count-coincidences", "Count coincidences in a timestamp file");
  std::string ts_path;
  std::string window_text = "5ns";
  count->add_option("input", ts_path, "Timestamp file ('detector<TAB>seconds' lines)")
      ->required()
      ->check(CLI::ExistingFile);
  count->add_option("--window", window_text, "Coincidence window, e.g. 5ns");
  count->add_option("--out-dir", out_dir, "Also write counts.json here");
  count->add_flag("--quiet", quiet, "Only print errors");

  auto* reproduce = app.add_subcommand("reproduce", "Run a bundled reproduction config");
  std::string figure;
  std::string ids;
  for (const auto& id : cli::bundled_ids()) ids += (ids.empty() ? "" : ", ") + id;
  reproduce->add_option("figure", figure, "One of: " + ids)->required()->check(CLI::IsMember(cli::bundled_ids()));
  common(reproduce, false);
  bool print_config = false;
  reproduce->add_flag("--print-config", print_config, "Print the bundled config and exit");

  CLI11_PARSE(app, argc, argv);

  cli::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  opts.format = format_of(format);
  if (app.got_subcommand("simulate") ? simulate->count("--seed") > 0
      : app.got_subcommand("fit")    ? fit->count("--seed") > 0
                                     : reproduce->count("--seed") > 0) {
    opts.seed = seed;
  }
  opts.quiet = quiet;

  try {
    if (app.got_subcommand("count-coincidences")) {
      double window = 0.0;
      try {
        window = cli::parse_quantity(window_text, cli::Quantity::time_s);
      } catch (const std::invalid_argument& e) {
        throw cli::ConfigError(cli::ConfigError::Kind::schema, std::string("--window: ") + e.what());
      }
      if (!(window > 0.0)) throw cli::ConfigError(cli::ConfigError::Kind::range, "--window must be > 0");
      std::ifstream in(ts_path);
      if (!in) throw std::runtime_error("cannot read '" + ts_path + "'");
      const auto counts = biphoton::count_coincidences(biphoton::read_timestamps(in), window);
      if (!quiet) std::cout << cli::counts_table(counts);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::string p = out_dir + "/counts.json";
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write '" + p + "'");
        out << cli::to_json(counts).dump(2) << "\n";
      }
      return cli::kExitOk;
    }

    cli::ExperimentConfig cfg;
    if (app.got_subcommand("reproduce")) {
      const auto text = *cli::bundled_config(figure);
      if (print_config) {
        std::cout << text;
        return cli::kExitOk;
      }
      cfg = cli::parse_config(text);
      return finish(cli::run(cfg, opts), quiet);
    }
    cfg = cli::load_config(config_path);
    if (app.got_subcommand("simulate")) return finish(cli::run(cfg, opts), quiet);

    cli::apply_overrides(cfg, opts);
    const auto data = cli::load_scans(cfg, data_paths,
                                      calibration_path.empty() ? std::nullopt : std::optional(calibration_path));
    cli::RunReport rep = cli::analyze(cfg, data);
    cli::write_outputs(cfg, data, rep);
    return finish(rep, quiet);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitRuntime;
  }
}
