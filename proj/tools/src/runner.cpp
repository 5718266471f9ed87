#include "biphoton/cli/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bundled_configs.hpp"

namespace biphoton::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string describe(const FitResult& f) {
  std::ostringstream out;
  out << f.model << (f.converged ? "" : "  [NOT CONVERGED: " + f.message + "]") << "\n";
  for (const auto& n : f.names) {
    out << "    " << n << " = " << fmt("%.6g", f.value(n)) << " +/- " << fmt("%.3g", f.error(n)) << "\n";
  }
  out << "    chi2 = " << fmt("%.6g", f.residual_sum_squares) << ", iterations = " << f.iterations << "\n";
  return out.str();
}

void record_fit(RunReport& rep, const std::string& label, const FitResult& f) {
  if (!f.converged) rep.failures.push_back("fit '" + label + "' did not converge: " + f.message);
}

std::string field_label(double b) { return fmt("%.6g", b); }

}  // namespace

void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.apparatus.acquisition.rng_seed = *opts.seed;
  }
  if (opts.out_dir) cfg.output.dir = *opts.out_dir;
  if (opts.format) cfg.output.format = *opts.format;
}

ScanSet simulate_scans(const ExperimentConfig& cfg) {
  ScanSet set;
  const Apparatus& app = cfg.apparatus;
  switch (cfg.scan.type) {
    case ScanType::delay: {
      set.scans.push_back(run_delay_scan(app, cfg.scan.settings));
      if (cfg.analysis.bell_fractions && !cfg.analysis.bell_fractions->hwp45_counts) {
        // Extra measurement at HWP 45 deg with its own noise stream.
        ArmStacks arms = app.stacks();
        arms.a.insert(arms.a.begin(), OpticalElement{"hwp", hwp(Angle::degrees(45.0))});
        const auto p = coincidence_probabilities(app.source, arms, cfg.analysis.bell_fractions->hwp_delay_um,
                                                 app.filter, app.mode_overlap);
        AcquisitionConfig acq = app.acquisition;
        acq.rng_seed = row_seed(cfg.seed, 2'000'000);
        set.hwp45 = sample_counts(p, acq);
      }
      break;
    }
    case ScanType::hwp:
      set.scans.push_back(run_hwp_scan(app, cfg.scan.settings, cfg.scan.at_delay_um));
      break;
    case ScanType::field: {
      const FaradaySample& sample = *cfg.scan.sample;
      set.fields_tesla = cfg.scan.settings;
      set.scans = run_field_scan(app, sample, cfg.scan.settings, cfg.scan.delays_um);
      if (!cfg.scan.calibration_angles_deg.empty()) {
        Apparatus cal = app;
        cal.acquisition.rng_seed = row_seed(cfg.seed, 3'000'000);
        set.calibration = run_rotation_scan(cal, cfg.scan.calibration_angles_deg, 0.0, sample.extra_path_um);
      }
      break;
    }
  }
  if (cfg.analysis.bell_fractions && cfg.analysis.bell_fractions->hwp45_counts) {
    set.hwp45 = cfg.analysis.bell_fractions->hwp45_counts;
  }
  return set;
}

RunReport analyze(const ExperimentConfig& cfg, const ScanSet& data) {
  RunReport rep;
  auto& s = rep.summary;
  std::ostringstream report;
  s["scan"] = {{"type", std::string(to_string(cfg.scan.type))}, {"points", data.scans.front().rows.size()},
               {"seed", cfg.seed}, {"name", cfg.output.name}};
  const AnalysisSpec& a = cfg.analysis;

  auto guarded = [&](const std::string& what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      rep.failures.push_back(what + ": " + e.what());
      report << what << ": FAILED (" << e.what() << ")\n";
    }
  };

  if (cfg.scan.type == ScanType::delay) {
    const ScanResult& scan = data.scans.front();
    const auto x = scan.settings();
    std::map<Channel, FitResult> free_fits;
    auto fit_of = [&](Channel ch) -> const FitResult& {
      auto it = free_fits.find(ch);
      if (it == free_fits.end()) it = free_fits.emplace(ch, fit_gaussian_offset(x, scan.channel(ch))).first;
      return it->second;
    };
    for (Channel ch : a.gaussian) {
      guarded("gaussian " + std::string(to_string(ch)), [&] {
        const FitResult& f = fit_of(ch);
        record_fit(rep, "gaussian " + std::string(to_string(ch)), f);
        s["fits"][std::string(to_string(ch))] = to_json(f);
        report << "Gaussian fit " << to_string(ch) << ": " << describe(f);
      });
    }
    if (a.visibility) {
      guarded("visibility", [&] {
        const Measurement v = visibility(fit_of(*a.visibility));
        s["visibility"] = {{"channel", std::string(to_string(*a.visibility))}, {"value", v.value}, {"error", v.error}};
        report << "Visibility " << to_string(*a.visibility) << " = " << fmt("%.4f", v.value) << " +/- "
               << fmt("%.4f", v.error) << "\n";
      });
    }
    if (a.coherence) {
      guarded("coherence", [&] {
        const FitResult& f = fit_of(*a.coherence);
        if (!f.converged) throw std::runtime_error("fit did not converge");
        const Coherence c = coherence_from_fit(f);
        s["coherence"] = {{"channel", std::string(to_string(*a.coherence))},
                          {"length_um", c.length_um.value},
                          {"length_error_um", c.length_um.error},
                          {"time_fs", c.time_fs.value},
                          {"time_error_fs", c.time_fs.error},
                          {"filter_length_um", coherence_length_from_bandwidth(cfg.apparatus.filter.center_nm,
                                                                               cfg.apparatus.filter.bandwidth_nm)}};
        report << "Coherence length " << fmt("%.2f", c.length_um.value) << " +/- " << fmt("%.2f", c.length_um.error)
               << " um, time " << fmt("%.1f", c.time_fs.value) << " +/- " << fmt("%.1f", c.time_fs.error) << " fs\n";
      });
    }
    if (a.bell_fractions) {
      guarded("bell_fractions", [&] {
        if (!data.hwp45) throw std::runtime_error("no HWP 45 deg measurement available");
        const ChannelFits fits = fit_delay_scan(scan);
        BellEstimatorOptions opts;
        opts.subtract_accidentals = a.bell_fractions->subtract_accidentals;
        opts.hwp_delay_um = a.bell_fractions->hwp_delay_um;
        const BellFractionEstimate est = estimate_bell_fractions(scan, *data.hwp45, fits, opts);
        s["bell_fractions"] = to_json(est);
        s["bell_fractions"]["hwp45_counts"] = to_json(*data.hwp45);
        report << "Bell fractions:";
        for (BellKind k : kBellKinds) report << " " << to_string(k) << "=" << fmt("%.4f", est[k]);
        report << "\n";
        for (const auto& w : est.warnings) report << "    warning: " << w << "\n";
      });
    }
  } else if (cfg.scan.type == ScanType::hwp) {
    const ScanResult& scan = data.scans.front();
    for (Channel ch : a.sin2) {
      guarded("sin2 " + std::string(to_string(ch)), [&] {
        const FitResult f = fit_sin2_offset(scan.settings(), scan.channel(ch), Sin2Mode::hwp_2theta);
        record_fit(rep, "sin2 " + std::string(to_string(ch)), f);
        s["fits"][std::string(to_string(ch))] = to_json(f);
        report << "sin^2(2 theta) fit " << to_string(ch) << ": " << describe(f);
      });
    }
  } else {
    for (std::size_t i = 0; i < data.scans.size(); ++i) {
      const std::string label = field_label(data.fields_tesla[i]);
      for (Channel ch : a.gaussian) {
        guarded("gaussian " + std::string(to_string(ch)) + " at " + label + " T", [&] {
          const FitResult f = fit_gaussian_offset(data.scans[i].settings(), data.scans[i].channel(ch));
          s["fits"][label][std::string(to_string(ch))] = to_json(f);
          report << "B = " << label << " T, Gaussian fit " << to_string(ch) << ": " << describe(f);
        });
      }
    }
    if (a.verdet) {
      guarded("verdet", [&] {
        if (!data.calibration) throw std::runtime_error("a rotation calibration scan is required");
        const VerdetSpec& v = *a.verdet;
        const Sin2Calibration cal = calibrate_rotation(*data.calibration, v.channel);
        const FieldScanAnalysis fa = analyze_field_scans(data.scans, data.fields_tesla, cal, v.channel,
                                                         cfg.scan.sample->length_m, v.sign, v.fit_intercept);
        nlohmann::json pts = nlohmann::json::array();
        for (std::size_t i = 0; i < fa.points.size(); ++i) {
          pts.push_back({{"field_tesla", fa.points[i].field_tesla},
                         {"zero_delay_counts", fa.zero_delay_counts[i]},
                         {"theta_rad", fa.points[i].theta_rad},
                         {"theta_error_rad", fa.points[i].error_rad}});
        }
        s["verdet"] = {{"channel", std::string(to_string(v.channel))},
                       {"value", fa.verdet.verdet.value},
                       {"error", fa.verdet.verdet.error},
                       {"calibration", {{"offset", cal.offset}, {"amplitude", cal.amplitude}}},
                       {"points", pts}};
        report << "Calibration: C = " << fmt("%.1f", cal.offset) << ", A = " << fmt("%.1f", cal.amplitude) << "\n";
        for (const auto& p : fa.points) {
          report << "    B = " << fmt("%.3f", p.field_tesla) << " T  theta = " << fmt("%.5f", p.theta_rad) << " +/- "
                 << fmt("%.5f", p.error_rad) << " rad\n";
        }
        report << "Verdet constant = " << fmt("%.3f", fa.verdet.verdet.value) << " +/- "
               << fmt("%.3f", fa.verdet.verdet.error) << " rad/(T m)\n";
        if (v.expect) {
          const bool ok = std::abs(fa.verdet.verdet.value - *v.expect) <= v.tolerance;
          s["verdet"]["expect"] = *v.expect;
          s["verdet"]["tolerance"] = v.tolerance;
          s["verdet"]["within_tolerance"] = ok;
          report << "    expected " << fmt("%.3f", *v.expect) << " +/- " << fmt("%.3f", v.tolerance) << ": "
                 << (ok ? "ok" : "OUTSIDE TOLERANCE") << "\n";
          if (!ok) rep.failures.push_back("Verdet constant outside the configured tolerance");
        }
      });
    }
  }
  s["failures"] = rep.failures;
  rep.fit_report = report.str();
  return rep;
}

void write_outputs(const ExperimentConfig& cfg, const ScanSet& data, RunReport& report) {
  const fs::path dir(cfg.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

  auto open = [&](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    report.files.push_back(p.string());
    return out;
  };
  auto close = [](std::ofstream& out, const fs::path& p) {
    out.close();
    if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
  };

  const std::string& name = cfg.output.name;
  if (cfg.output.format == OutputFormat::csv) {
    for (std::size_t i = 0; i < data.scans.size(); ++i) {
      std::map<std::string, std::string> meta;
      fs::path p = dir / (name + ".csv");
      if (cfg.scan.type == ScanType::field) {
        meta["field"] = fmt("%.17g", data.fields_tesla[i]);
        p = dir / (name + "_field" + std::to_string(i) + ".csv");
      }
      auto out = open(p);
      write_scan_csv(out, data.scans[i], meta);
      close(out, p);
    }
    if (data.calibration) {
      const fs::path p = dir / (name + "_calibration.csv");
      auto out = open(p);
      write_scan_csv(out, *data.calibration);
      close(out, p);
    }
  } else {
    nlohmann::json j;
    nlohmann::json scans = nlohmann::json::array();
    for (std::size_t i = 0; i < data.scans.size(); ++i) {
      std::map<std::string, std::string> meta;
      if (cfg.scan.type == ScanType::field) meta["field"] = fmt("%.17g", data.fields_tesla[i]);
      scans.push_back(to_json(data.scans[i], meta));
    }
    j["scans"] = scans;
    if (data.calibration) j["calibration"] = to_json(*data.calibration);
    if (data.hwp45) j["hwp45_counts"] = to_json(*data.hwp45);
    const fs::path p = dir / (name + ".json");
    auto out = open(p);
    out << j.dump(2) << "\n";
    close(out, p);
  }

  const fs::path rp = dir / (name + "_fits.txt");
  auto rout = open(rp);
  rout << report.fit_report;
  close(rout, rp);

  const fs::path sp = dir / "summary.json";
  report.files.push_back(sp.string());
  report.summary["files"] = report.files;
  std::ofstream sout(sp, std::ios::binary);
  if (!sout) throw std::runtime_error("cannot write '" + sp.string() + "'");
  sout << report.summary.dump(2) << "\n";
  close(sout, sp);
}

RunReport run(ExperimentConfig cfg, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  const ScanSet data = simulate_scans(cfg);
  RunReport rep = analyze(cfg, data);
  write_outputs(cfg, data, rep);
  return rep;
}

ScanSet load_scans(const ExperimentConfig& cfg, const std::vector<std::string>& data_paths,
                   const std::optional<std::string>& calibration_path) {
  auto read = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read scan file '" + path + "'");
    try {
      return read_scan_csv(in);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
  };
  if (data_paths.empty()) throw std::runtime_error("no scan files given");
  ScanSet set;
  for (const auto& p : data_paths) {
    ScanFile f = read(p);
    f.scan.apparatus = cfg.apparatus;
    if (cfg.scan.type == ScanType::field) {
      auto it = f.metadata.find("field");
      if (it == f.metadata.end()) throw std::runtime_error(p + ": field scan file lacks a '# field:' line");
      set.fields_tesla.push_back(std::stod(it->second));
    }
    set.scans.push_back(std::move(f.scan));
  }
  if (cfg.scan.type != ScanType::field && set.scans.size() != 1) {
    throw std::runtime_error("delay and hwp analyses take exactly one scan file");
  }
  if (calibration_path) {
    ScanFile c = read(*calibration_path);
    c.scan.apparatus = cfg.apparatus;
    set.calibration = std::move(c.scan);
  }
  if (cfg.analysis.bell_fractions && cfg.analysis.bell_fractions->hwp45_counts) {
    set.hwp45 = cfg.analysis.bell_fractions->hwp45_counts;
  }
  return set;
}

std::vector<std::string> bundled_ids() {
  std::vector<std::string> out;
  for (const auto& c : kBundledConfigs) out.emplace_back(c.id);
  return out;
}

std::optional<std::string_view> bundled_config(std::string_view id) {
  for (const auto& c : kBundledConfigs) {
    if (c.id == id) return c.text;
  }
  return std::nullopt;
}

}  // namespace biphoton::cli
