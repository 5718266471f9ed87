#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biphoton/detection.hpp"
#include "biphoton/experiment.hpp"
#include "biphoton/fock_state.hpp"
#include "biphoton/interference.hpp"

namespace biphoton {

struct FitResult {
  std::string model;
  std::vector<std::string> names;  // parameter order used by covariance
  std::map<std::string, double> parameters;
  std::map<std::string, double> uncertainties;  // 1 sigma
  std::vector<double> covariance;               // row-major, names.size()^2
  double residual_sum_squares = 0.0;            // weighted (chi^2)
  /// Largest |cos| between the residual vector and a Jacobian column at the solution.
  double gradient_measure = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;

  double value(std::string_view name) const;
  double error(std::string_view name) const;
  double cov(std::string_view row, std::string_view col) const;
  /// Evaluates the fitted model at x.
  double evaluate(double x) const;
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
};

/// Model functions and analytic gradients, exposed for Jacobian checks.
namespace model {

/// p = {A, x0, w, C}: C + A exp(-4 ln2 (x - x0)^2 / w^2)
double gaussian_offset(double x, std::span<const double, 4> p);
std::array<double, 4> gaussian_offset_gradient(double x, std::span<const double, 4> p);

/// p = {A, theta0, C}, angles in degrees: C + A sin^2(k (theta - theta0))
double sin2_offset(double theta_deg, std::span<const double, 3> p, int k);
std::array<double, 3> sin2_offset_gradient(double theta_deg, std::span<const double, 3> p, int k);

/// p = {slope, intercept}
double linear(double x, std::span<const double, 2> p);
std::array<double, 2> linear_gradient(double x, std::span<const double, 2> p);

}  // namespace model

/// Poisson weights sigma_i = sqrt(max(y_i, 1)).
std::vector<double> poisson_sigma(std::span<const double> y);

/// Damped Gauss-Newton fit of a Gaussian plus constant. Parameters A, x0, w (FWHM), C.
/// Needs >= 5 points and strictly monotone x; non-convergence is flagged, not thrown.
FitResult fit_gaussian_offset(std::span<const double> x, std::span<const double> y, const FitOptions& opts = {});

/// Gaussian plus constant with centre and width held fixed; linear in A and C.
FitResult fit_gaussian_offset_fixed(std::span<const double> x, std::span<const double> y, double center,
                                    double width);

enum class Sin2Mode { hwp_2theta, rotation_theta };

/// C + A sin^2(k (theta - theta0)), k = 2 for a HWP angle scan and 1 for a polarization rotation.
FitResult fit_sin2_offset(std::span<const double> theta_deg, std::span<const double> y, Sin2Mode mode,
                          const FitOptions& opts = {});

/// Weighted straight line. sigma empty or non-positive means unit weights with
/// the covariance scaled by the reduced chi^2.
FitResult fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
                   bool fit_intercept);

struct Measurement {
  double value = 0.0;
  double error = 0.0;
};

/// |A| / C of a Gaussian fit with first-order error propagation.
Measurement visibility(const FitResult& fit);

struct Coherence {
  Measurement length_um;
  Measurement time_fs;
};

inline constexpr double kSpeedOfLightUmPerFs = 0.299792458;

Coherence coherence_from_fit(const FitResult& fit);

/// Background-subtracted channel fits of a delay scan.
using ChannelFits = std::map<Channel, FitResult>;

/// Free Gaussian fits for all six channels; channels whose dip or peak is not
/// significant are refit with the centre and width of the strongest structure.
ChannelFits fit_delay_scan(const ScanResult& scan);

/// Expected accidental coincidences per channel from the mean singles of `rows`.
std::array<double, 6> estimate_accidentals(std::span<const ScanRow> rows, const AcquisitionConfig& acq);

struct BellFractionEstimate {
  std::array<double, 4> fractions{};  // indexed by BellKind
  std::string method;
  /// Two-photon indistinguishability at the dip centre inferred from the Phi-channel dips.
  double indistinguishability = 1.0;
  /// Share of the Phi-channel plateau left at zero delay (1 - indistinguishability).
  double residual_dip_fraction = 0.0;
  bool clamped = false;
  std::vector<std::string> warnings;

  double operator[](BellKind k) const { return fractions[static_cast<std::size_t>(k)]; }
};

struct BellEstimatorOptions {
  bool subtract_accidentals = true;
  /// Stage delay of the HWP=45° point; defaults to the cross-channel dip centre.
  std::optional<double> hwp_delay_um;
};

/// Plateau/extremum ratio procedure:
///  1. Psi weight from the cross-channel plateaus relative to all plateaus.
///  2. Psi+ vs Psi- from the bunching (Hc:Vc, Hd:Vd) minus anti-bunching
///     (Vc:Hd, Hc:Vd) amplitudes, divided by the Phi-dip visibility.
///  3. Phi+ vs Phi- from Hc:Vc against Vc:Hd with the HWP at 45°.
/// Accidentals are subtracted first. Throws std::invalid_argument when a
/// required channel fit is missing.
BellFractionEstimate estimate_bell_fractions(const ScanResult& delay_scan, const ChannelCounts& hwp45_point,
                                             const ChannelFits& fits, const BellEstimatorOptions& opts = {});

struct RotationEstimate {
  double theta_rad = 0.0;
  double error_rad = 0.0;
  bool clamped = false;
};

struct Sin2Calibration {
  double offset = 0.0;  // C
  double amplitude = 0.0;  // A, counts at full conversion above C
  double offset_error = 0.0;
  double amplitude_error = 0.0;
};

/// theta = asin(sqrt((N - C) / A)). The argument is clamped to [0, 1] and the
/// clamp is reported. Errors are propagated by evaluating theta at N ± sigma.
/// Throws std::invalid_argument if A <= 0.
RotationEstimate rotation_from_counts(double counts, const Sin2Calibration& calibration,
                                      std::optional<double> counts_error = std::nullopt);

struct RotationPoint {
  double field_tesla = 0.0;
  double theta_rad = 0.0;
  double error_rad = 0.0;
};

struct VerdetEstimate {
  Measurement verdet;  // rad T^-1 m^-1
  FitResult line;
};

/// Slope of theta(B) divided by the sample length. Needs >= 2 points with distinct fields.
VerdetEstimate fit_verdet(std::span<const RotationPoint> points, double length_m, bool fit_intercept = false);

/// Sin^2 calibration from a rotation scan (counts vs known rotation angle) on one channel.
Sin2Calibration calibrate_rotation(const ScanResult& rotation_scan, Channel channel);

struct FieldScanAnalysis {
  std::vector<FitResult> fits;  // per field, on the analysed channel
  std::vector<double> zero_delay_counts;
  std::vector<RotationPoint> points;
  VerdetEstimate verdet;
};

/// Field scans -> zero-delay peak counts -> rotation angles -> Verdet constant.
/// Coincidence rates are even in theta, so the sign of each angle is
/// rotation_sign · sign(B); rotation_sign is an external convention input.
FieldScanAnalysis analyze_field_scans(std::span<const ScanResult> scans, std::span<const double> fields_tesla,
                                      const Sin2Calibration& calibration, Channel channel, double length_m,
                                      int rotation_sign = 1, bool fit_intercept = false);

}  // namespace biphoton
