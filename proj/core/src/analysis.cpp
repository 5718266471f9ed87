// Quantities extracted from fitted scans.

#include "biphoton/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace biphoton {

namespace {

constexpr double kSignificance = 5.0;

std::size_t ci(Channel ch) { return static_cast<std::size_t>(ch); }
std::size_t di(Detector d) { return static_cast<std::size_t>(d); }

double significance(const FitResult& f) {
  const double err = f.error("A");
  if (!(err > 0.0) || !std::isfinite(err)) return 0.0;
  return std::abs(f.value("A")) / err;
}

bool significant(const FitResult& f) { return f.converged && significance(f) > kSignificance; }

const FitResult& require(const ChannelFits& fits, Channel ch) {
  auto it = fits.find(ch);
  if (it == fits.end()) {
    throw std::invalid_argument("missing fit for channel " + std::string(to_string(ch)));
  }
  return it->second;
}

double clamp_unit(double v, bool& clamped) {
  if (v < 0.0 || v > 1.0) clamped = true;
  return std::clamp(v, 0.0, 1.0);
}

double peak_counts(const FitResult& f) { return f.value("C") + f.value("A"); }

double peak_counts_error(const FitResult& f) {
  const double var = f.cov("C", "C") + f.cov("A", "A") + 2.0 * f.cov("A", "C");
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace

Measurement visibility(const FitResult& fit) {
  if (!fit.converged) throw std::invalid_argument("visibility needs a converged fit");
  const double a = fit.value("A");
  const double c = fit.value("C");
  if (!(c > 0.0)) throw std::invalid_argument("visibility needs a positive offset C");
  const double var = fit.cov("A", "A") / (c * c) + a * a * fit.cov("C", "C") / std::pow(c, 4) -
                     2.0 * a * fit.cov("A", "C") / std::pow(c, 3);
  return {std::abs(a) / c, std::sqrt(std::max(var, 0.0))};
}

Coherence coherence_from_fit(const FitResult& fit) {
  const double w = std::abs(fit.value("w"));
  const double err = fit.error("w");
  return {{w, err}, {w / kSpeedOfLightUmPerFs, err / kSpeedOfLightUmPerFs}};
}

ChannelFits fit_delay_scan(const ScanResult& scan) {
  const std::vector<double> x = scan.settings();
  ChannelFits fits;
  for (Channel ch : kChannels) fits.emplace(ch, fit_gaussian_offset(x, scan.channel(ch)));

  // Reference shape: the Phi-channel dips if visible, else the strongest structure.
  double center = 0.0;
  double width = scan.apparatus.filter.dip_fwhm_um();
  std::vector<const FitResult*> phi;
  for (Channel ch : {Channel::HcHd, Channel::VcVd}) {
    if (significant(fits.at(ch))) phi.push_back(&fits.at(ch));
  }
  if (!phi.empty()) {
    center = 0.0;
    width = 0.0;
    for (const auto* f : phi) {
      center += f->value("x0") / static_cast<double>(phi.size());
      width += f->value("w") / static_cast<double>(phi.size());
    }
  } else {
    const FitResult* best = nullptr;
    for (const auto& [ch, f] : fits) {
      if (significant(f) && (best == nullptr || significance(f) > significance(*best))) best = &f;
    }
    if (best != nullptr) {
      center = best->value("x0");
      width = best->value("w");
    }
  }
  for (auto& [ch, f] : fits) {
    if (!significant(f)) f = fit_gaussian_offset_fixed(x, scan.channel(ch), center, width);
  }
  return fits;
}

std::array<double, 6> estimate_accidentals(std::span<const ScanRow> rows, const AcquisitionConfig& acq) {
  std::array<double, 6> out{};
  if (rows.empty() || !(acq.duration > 0.0)) return out;
  std::array<double, 4> rate{};
  for (const auto& r : rows) {
    for (std::size_t d = 0; d < 4; ++d) rate[d] += static_cast<double>(r.counts.singles[d]);
  }
  for (double& r : rate) r /= static_cast<double>(rows.size()) * acq.duration;
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    out[ci(ch)] = accidental_rate(rate[di(d1)], rate[di(d2)], acq.coincidence_window) * acq.duration;
  }
  return out;
}

BellFractionEstimate estimate_bell_fractions(const ScanResult& delay_scan, const ChannelCounts& hwp45_point,
                                             const ChannelFits& fits, const BellEstimatorOptions& opts) {
  for (Channel ch : kChannels) require(fits, ch);
  BellFractionEstimate est;
  est.method =
      "psi weight = cross+bunching plateaus / (2 x Phi plateau sum + cross+bunching plateaus); "
      "psi+ - psi- = (bunching - anti-bunching amplitudes) / (scale x K), K = Phi dip depth / Phi plateau; "
      "phi+/phi- from (Hc:Vc + Hd:Vd) vs (Vc:Hd + Hc:Vd) at HWP 45 deg divided by K at that delay";

  const AcquisitionConfig& acq = delay_scan.apparatus.acquisition;
  std::array<double, 6> acc{};
  if (opts.subtract_accidentals) acc = estimate_accidentals(delay_scan.rows, acq);

  std::array<double, 6> plateau{};
  std::array<double, 6> amp{};
  for (Channel ch : kChannels) {
    const FitResult& f = fits.at(ch);
    plateau[ci(ch)] = f.value("C") - acc[ci(ch)];
    amp[ci(ch)] = f.value("A");
    if (plateau[ci(ch)] < 0.0) {
      est.warnings.push_back("negative background-subtracted plateau on " + std::string(to_string(ch)) +
                             "; clamped to 0");
      plateau[ci(ch)] = 0.0;
      est.clamped = true;
    }
  }

  const double phi_plateau = plateau[ci(Channel::HcHd)] + plateau[ci(Channel::VcVd)];
  const double psi_plateau = plateau[ci(Channel::HcVd)] + plateau[ci(Channel::VcHd)] +
                             plateau[ci(Channel::HcVc)] + plateau[ci(Channel::HdVd)];
  const double scale = 2.0 * phi_plateau + psi_plateau;
  if (!(scale > 0.0)) throw std::invalid_argument("delay scan has no coincidences above background");
  const double p_psi = psi_plateau / scale;
  const double p_phi = 1.0 - p_psi;

  // Indistinguishability from the Phi-channel dip depth.
  double k = 1.0;
  const FitResult& hh = fits.at(Channel::HcHd);
  const FitResult& vv = fits.at(Channel::VcVd);
  const double dip = -(amp[ci(Channel::HcHd)] + amp[ci(Channel::VcVd)]);
  const double dip_err = std::hypot(hh.error("A"), vv.error("A"));
  if (phi_plateau > 0.0 && dip > kSignificance * dip_err) {
    k = dip / phi_plateau;
    if (k > 1.0 || k < 0.05) est.clamped = true;
    k = std::clamp(k, 0.05, 1.0);
  } else {
    est.warnings.push_back("Phi-channel dip not significant; indistinguishability taken as 1");
  }
  est.indistinguishability = k;
  est.residual_dip_fraction = 1.0 - k;
  if (est.residual_dip_fraction > 0.01) {
    est.warnings.push_back("residual counts at zero delay are " +
                           std::to_string(est.residual_dip_fraction * 100.0) +
                           "% of the Phi plateau; ratio procedure corrects for them");
  }

  const double bunch = amp[ci(Channel::HcVc)] + amp[ci(Channel::HdVd)];
  const double anti = amp[ci(Channel::HcVd)] + amp[ci(Channel::VcHd)];
  const double psi_split = (bunch - anti) / (scale * k);  // p_psi+ - p_psi-
  const double p_psi_plus = std::clamp(0.5 * (p_psi + psi_split), 0.0, p_psi);
  if (std::abs(psi_split) > p_psi + 1e-12) est.clamped = true;

  // HWP at 45 deg maps Phi+- onto Psi+-; the same split then reads Phi+ vs Phi-.
  std::array<double, 6> acc_h{};
  if (opts.subtract_accidentals && acq.duration > 0.0) {
    for (Channel ch : kChannels) {
      const auto [d1, d2] = detectors_of(ch);
      acc_h[ci(ch)] = accidental_rate(static_cast<double>(hwp45_point.singles_at(d1)) / acq.duration,
                                      static_cast<double>(hwp45_point.singles_at(d2)) / acq.duration,
                                      acq.coincidence_window) *
                      acq.duration;
    }
  }
  auto net = [&](Channel ch) { return std::max(0.0, static_cast<double>(hwp45_point[ch]) - acc_h[ci(ch)]); };
  const double xs = net(Channel::HcVc) + net(Channel::HdVd);
  const double ys = net(Channel::VcHd) + net(Channel::HcVd);
  const FitResult& cross = fits.at(Channel::HcVc);
  const double center = cross.value("x0");
  const double width = cross.value("w");
  const double at = opts.hwp_delay_um.value_or(center);
  const std::array<double, 4> unit{1.0, center, width, 0.0};
  const double k_h = k * model::gaussian_offset(at, unit);
  double phi_ratio = 0.0;
  if (xs + ys > 0.0 && k_h > 0.0) {
    phi_ratio = (xs - ys) / ((xs + ys) * k_h);
  } else {
    est.warnings.push_back("HWP 45 deg point carries no cross-channel counts; Phi split undetermined");
  }
  if (std::abs(phi_ratio) > 1.0) est.clamped = true;
  phi_ratio = std::clamp(phi_ratio, -1.0, 1.0);

  auto& fr = est.fractions;
  fr[static_cast<std::size_t>(BellKind::PhiPlus)] = clamp_unit(0.5 * p_phi * (1.0 + phi_ratio), est.clamped);
  fr[static_cast<std::size_t>(BellKind::PhiMinus)] = clamp_unit(0.5 * p_phi * (1.0 - phi_ratio), est.clamped);
  fr[static_cast<std::size_t>(BellKind::PsiPlus)] = clamp_unit(p_psi_plus, est.clamped);
  fr[static_cast<std::size_t>(BellKind::PsiMinus)] = clamp_unit(p_psi - p_psi_plus, est.clamped);
  return est;
}

RotationEstimate rotation_from_counts(double counts, const Sin2Calibration& calibration,
                                      std::optional<double> counts_error) {
  const double a = calibration.amplitude;
  const double c = calibration.offset;
  if (!(a > 0.0)) throw std::invalid_argument("rotation calibration needs amplitude A > 0");
  RotationEstimate out;
  auto angle = [&](double n, bool* clamped) {
    const double x = (n - c) / a;
    if (clamped != nullptr && (x < 0.0 || x > 1.0)) *clamped = true;
    return std::asin(std::sqrt(std::clamp(x, 0.0, 1.0)));
  };
  out.theta_rad = angle(counts, &out.clamped);
  const double x = std::clamp((counts - c) / a, 0.0, 1.0);
  const double sn = counts_error.value_or(std::sqrt(std::max(counts, 1.0)));
  const double sigma = std::sqrt(sn * sn + calibration.offset_error * calibration.offset_error +
                                 x * x * calibration.amplitude_error * calibration.amplitude_error);
  out.error_rad = 0.5 * (angle(counts + sigma, nullptr) - angle(counts - sigma, nullptr));
  return out;
}

VerdetEstimate fit_verdet(std::span<const RotationPoint> points, double length_m, bool fit_intercept) {
  if (!(length_m > 0.0)) throw std::invalid_argument("sample length must be > 0");
  if (points.size() < 2) throw std::invalid_argument("Verdet fit needs at least 2 field points");
  std::vector<double> b, theta, sigma;
  for (const auto& p : points) {
    b.push_back(p.field_tesla);
    theta.push_back(p.theta_rad);
    sigma.push_back(p.error_rad);
  }
  VerdetEstimate est;
  est.line = fit_line(b, theta, sigma, fit_intercept);
  est.verdet = {est.line.value("slope") / length_m, est.line.error("slope") / length_m};
  return est;
}

Sin2Calibration calibrate_rotation(const ScanResult& rotation_scan, Channel channel) {
  const FitResult f =
      fit_sin2_offset(rotation_scan.settings(), rotation_scan.channel(channel), Sin2Mode::rotation_theta);
  if (!f.converged) throw std::runtime_error("rotation calibration fit did not converge: " + f.message);
  Sin2Calibration cal{f.value("C"), f.value("A"), f.error("C"), f.error("A")};
  if (cal.amplitude < 0.0) {
    // A negative amplitude is the same curve shifted by 90 deg; report it with A > 0.
    cal.offset += cal.amplitude;
    cal.amplitude = -cal.amplitude;
  }
  return cal;
}

FieldScanAnalysis analyze_field_scans(std::span<const ScanResult> scans, std::span<const double> fields_tesla,
                                      const Sin2Calibration& calibration, Channel channel, double length_m,
                                      int rotation_sign, bool fit_intercept) {
  if (scans.size() != fields_tesla.size()) throw std::invalid_argument("one scan per field is required");
  if (scans.empty()) throw std::invalid_argument("no field scans to analyse");
  if (rotation_sign != 1 && rotation_sign != -1) throw std::invalid_argument("rotation_sign must be +1 or -1");

  std::size_t ref = 0;
  for (std::size_t i = 1; i < fields_tesla.size(); ++i) {
    if (std::abs(fields_tesla[i]) > std::abs(fields_tesla[ref])) ref = i;
  }
  const FitResult reference = fit_gaussian_offset(scans[ref].settings(), scans[ref].channel(channel));
  const bool have_shape = significant(reference);
  const double center = have_shape ? reference.value("x0") : 0.0;
  const double width = have_shape ? reference.value("w") : scans[ref].apparatus.filter.dip_fwhm_um();

  FieldScanAnalysis out;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const std::vector<double> x = scans[i].settings();
    const std::vector<double> y = scans[i].channel(channel);
    FitResult f = fit_gaussian_offset(x, y);
    if (!significant(f)) f = fit_gaussian_offset_fixed(x, y, center, width);
    const double n = peak_counts(f);
    const RotationEstimate r = rotation_from_counts(n, calibration, peak_counts_error(f));
    const double b = fields_tesla[i];
    const double sign = b > 0.0 ? 1.0 : (b < 0.0 ? -1.0 : 0.0);
    out.points.push_back({b, rotation_sign * sign * r.theta_rad, r.error_rad});
    out.zero_delay_counts.push_back(n);
    out.fits.push_back(std::move(f));
  }
  out.verdet = fit_verdet(out.points, length_m, fit_intercept);
  return out;
}

}  // namespace biphoton
