// Least-squares fitting for the three model families used by the analysis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "biphoton/analysis.hpp"

namespace biphoton {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kFourLn2 = 4.0 * std::numbers::ln2;

using ModelFn = std::function<double(double, const Eigen::VectorXd&)>;
using GradFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct LmProblem {
  std::string model;
  std::vector<std::string> names;
  std::span<const double> x;
  std::span<const double> y;
  std::vector<double> sigma;
  ModelFn f;
  GradFn grad;
};

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + n / 2));
  }
  return m;
}

void check_xy(std::span<const double> x, std::span<const double> y, std::size_t min_points) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  if (x.size() < min_points) {
    throw std::invalid_argument("fit needs at least " + std::to_string(min_points) + " points");
  }
  const bool up = x[1] > x[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (up ? !(x[i] > x[i - 1]) : !(x[i] < x[i - 1])) throw std::invalid_argument("x must be strictly monotone");
  }
}

// Covariance (J^T J)^-1; directions the data do not constrain get infinite variance.
Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& jtj) {
  const Eigen::Index n = jtj.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  const double cutoff = std::max(lambda.cwiseAbs().maxCoeff(), 1e-300) * 1e-14;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  std::vector<bool> unbounded(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda[k] > cutoff) {
      cov += vecs.col(k) * vecs.col(k).transpose() / lambda[k];
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(vecs(j, k)) > 1e-6) unbounded[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (unbounded[static_cast<std::size_t>(j)]) cov(j, j) = std::numeric_limits<double>::infinity();
  }
  return cov;
}

FitResult package(const LmProblem& prob, const Eigen::VectorXd& p, const Eigen::MatrixXd& cov, double chi2,
                  double grad_measure, bool converged, int iterations, std::string message) {
  FitResult r;
  r.model = prob.model;
  r.names = prob.names;
  const auto n = static_cast<std::size_t>(p.size());
  r.covariance.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    r.parameters[prob.names[i]] = p[static_cast<Eigen::Index>(i)];
    const double var = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    r.uncertainties[prob.names[i]] = std::sqrt(std::max(var, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      r.covariance[i * n + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  r.residual_sum_squares = chi2;
  r.gradient_measure = grad_measure;
  r.converged = converged;
  r.iterations = iterations;
  r.message = std::move(message);
  return r;
}

struct Linearization {
  Eigen::MatrixXd jac;
  Eigen::VectorXd res;
  double chi2 = 0.0;
};

Linearization linearize(const LmProblem& prob, const Eigen::VectorXd& p) {
  const auto m = static_cast<Eigen::Index>(prob.x.size());
  Linearization lin{Eigen::MatrixXd(m, p.size()), Eigen::VectorXd(m), 0.0};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double s = prob.sigma[k];
    lin.res[i] = (prob.y[k] - prob.f(prob.x[k], p)) / s;
    lin.jac.row(i) = prob.grad(prob.x[k], p).transpose() / s;
  }
  lin.chi2 = lin.res.squaredNorm();
  return lin;
}

double chi2_at(const LmProblem& prob, const Eigen::VectorXd& p) {
  double c = 0.0;
  for (std::size_t k = 0; k < prob.x.size(); ++k) {
    const double r = (prob.y[k] - prob.f(prob.x[k], p)) / prob.sigma[k];
    c += r * r;
  }
  return c;
}

double gradient_cosine(const Linearization& lin) {
  const double rnorm = lin.res.norm();
  if (rnorm == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < lin.jac.cols(); ++j) {
    const double cn = lin.jac.col(j).norm();
    if (cn == 0.0) continue;
    worst = std::max(worst, std::abs(lin.jac.col(j).dot(lin.res)) / (cn * rnorm));
  }
  return worst;
}

FitResult levenberg_marquardt(const LmProblem& prob, Eigen::VectorXd p, const FitOptions& opts) {
  double data_scale = 0.0;
  for (std::size_t k = 0; k < prob.y.size(); ++k) data_scale += std::pow(prob.y[k] / prob.sigma[k], 2);
  const double exact_fit = 1e-24 * std::max(data_scale, 1.0);

  Linearization lin = linearize(prob, p);
  Eigen::MatrixXd jtj = lin.jac.transpose() * lin.jac;
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  std::string message = "iteration limit reached";
  for (; iter < opts.max_iterations; ++iter) {
    if (lin.chi2 <= exact_fit || gradient_cosine(lin) <= opts.gradient_tolerance) {
      converged = true;
      message = "converged";
      break;
    }
    const Eigen::VectorXd g = lin.jac.transpose() * lin.res;
    const double diag_floor = std::max(jtj.diagonal().maxCoeff(), 1e-300) * 1e-12;
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index j = 0; j < damped.rows(); ++j) damped(j, j) += lambda * std::max(jtj(j, j), diag_floor);
      const Eigen::VectorXd step = damped.ldlt().solve(g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = p + step;
      const double c = chi2_at(prob, trial);
      if (std::isfinite(c) && c < lin.chi2) {
        p = trial;
        lambda = std::max(lambda / 10.0, 1e-15);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left at working precision.
      converged = gradient_cosine(lin) <= opts.gradient_tolerance || lin.chi2 <= exact_fit;
      message = converged ? "converged" : "stalled above gradient tolerance";
      break;
    }
    lin = linearize(prob, p);
    jtj = lin.jac.transpose() * lin.jac;
  }
  const double gm = gradient_cosine(lin);
  return package(prob, p, covariance_of(jtj), lin.chi2, gm, converged, iter, message);
}

int harmonic(Sin2Mode mode) { return mode == Sin2Mode::hwp_2theta ? 2 : 1; }

// Width from the half-amplitude crossings around the extremum.
double half_width_guess(std::span<const double> x, std::span<const double> y, std::size_t peak, double base,
                        double amp) {
  auto beyond_half = [&](std::size_t i) { return std::abs(y[i] - base) >= 0.5 * std::abs(amp); };
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && beyond_half(lo - 1)) --lo;
  while (hi + 1 < x.size() && beyond_half(hi + 1)) ++hi;
  const double w = std::abs(x[hi] - x[lo]);
  const double dx = std::abs(x[1] - x[0]);
  return std::max(w, dx);
}

}  // namespace

double FitResult::value(std::string_view name) const {
  auto it = parameters.find(std::string(name));
  if (it == parameters.end()) throw std::out_of_range("fit has no parameter '" + std::string(name) + "'");
  return it->second;
}

double FitResult::error(std::string_view name) const {
  auto it = uncertainties.find(std::string(name));
  if (it == uncertainties.end()) throw std::out_of_range("fit has no parameter '" + std::string(name) + "'");
  return it->second;
}

double FitResult::cov(std::string_view row, std::string_view col) const {
  const auto find = [&](std::string_view n) {
    auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) throw std::out_of_range("fit has no parameter '" + std::string(n) + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  return covariance[find(row) * names.size() + find(col)];
}

double FitResult::evaluate(double x) const {
  if (model == "gaussian_offset" || model == "gaussian_offset_fixed") {
    const std::array<double, 4> p{value("A"), value("x0"), value("w"), value("C")};
    return model::gaussian_offset(x, p);
  }
  if (model == "sin2_offset_hwp" || model == "sin2_offset_rotation") {
    const std::array<double, 3> p{value("A"), value("theta0"), value("C")};
    return model::sin2_offset(x, p, model == "sin2_offset_hwp" ? 2 : 1);
  }
  if (model == "linear") {
    const std::array<double, 2> p{value("slope"), value("intercept")};
    return model::linear(x, p);
  }
  throw std::logic_error("unknown model '" + model + "'");
}

namespace model {

double gaussian_offset(double x, std::span<const double, 4> p) {
  const double u = x - p[1];
  return p[3] + p[0] * std::exp(-kFourLn2 * u * u / (p[2] * p[2]));
}

std::array<double, 4> gaussian_offset_gradient(double x, std::span<const double, 4> p) {
  const double u = x - p[1];
  const double w2 = p[2] * p[2];
  const double g = std::exp(-kFourLn2 * u * u / w2);
  return {g, p[0] * g * 2.0 * kFourLn2 * u / w2, p[0] * g * 2.0 * kFourLn2 * u * u / (w2 * p[2]), 1.0};
}

double sin2_offset(double theta_deg, std::span<const double, 3> p, int k) {
  const double s = std::sin(k * (theta_deg - p[1]) * kDegToRad);
  return p[2] + p[0] * s * s;
}

std::array<double, 3> sin2_offset_gradient(double theta_deg, std::span<const double, 3> p, int k) {
  const double u = k * (theta_deg - p[1]) * kDegToRad;
  const double s = std::sin(u);
  return {s * s, -p[0] * std::sin(2.0 * u) * k * kDegToRad, 1.0};
}

double linear(double x, std::span<const double, 2> p) { return p[0] * x + p[1]; }

std::array<double, 2> linear_gradient(double x, std::span<const double, 2>) { return {x, 1.0}; }

}  // namespace model

std::vector<double> poisson_sigma(std::span<const double> y) {
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = std::sqrt(std::max(y[i], 1.0));
  return s;
}

FitResult fit_gaussian_offset(std::span<const double> x, std::span<const double> y, const FitOptions& opts) {
  check_xy(x, y, 5);
  LmProblem prob{"gaussian_offset",
                 {"A", "x0", "w", "C"},
                 x,
                 y,
                 poisson_sigma(y),
                 [](double xi, const Eigen::VectorXd& p) {
                   return model::gaussian_offset(xi, std::span<const double, 4>(p.data(), 4));
                 },
                 [](double xi, const Eigen::VectorXd& p) {
                   const auto g = model::gaussian_offset_gradient(xi, std::span<const double, 4>(p.data(), 4));
                   return Eigen::Vector4d(g[0], g[1], g[2], g[3]).eval();
                 }};

  const double base = median(std::vector<double>(y.begin(), y.end()));
  std::size_t ext = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (std::abs(y[i] - base) > std::abs(y[ext] - base)) ext = i;
  }
  const double amp = y[ext] - base;
  const double span = std::abs(x.back() - x.front());

  // Documented seed first; the half-width crossing seed covers narrow dips on wide scans.
  const std::array<double, 2> widths{span / 4.0, half_width_guess(x, y, ext, base, amp)};
  std::optional<FitResult> best;
  for (double w0 : widths) {
    Eigen::VectorXd p0(4);
    p0 << amp, x[ext], w0, base;
    FitResult r = levenberg_marquardt(prob, p0, opts);
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.residual_sum_squares < best->residual_sum_squares);
    if (better) best = std::move(r);
  }
  best->parameters["w"] = std::abs(best->parameters["w"]);
  return *best;
}

FitResult fit_gaussian_offset_fixed(std::span<const double> x, std::span<const double> y, double center,
                                    double width) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  if (x.size() < 2) throw std::invalid_argument("fixed-shape fit needs at least 2 points");
  if (!(width > 0.0)) throw std::invalid_argument("fixed-shape fit needs a positive width");
  const std::vector<double> sigma = poisson_sigma(y);
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd jac(m, 2);
  Eigen::VectorXd rhs(m);
  const std::array<double, 4> unit{1.0, center, width, 0.0};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    jac(i, 0) = model::gaussian_offset(x[k], unit) / sigma[k];
    jac(i, 1) = 1.0 / sigma[k];
    rhs[i] = y[k] / sigma[k];
  }
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const Eigen::Vector2d sol = jtj.ldlt().solve(jac.transpose() * rhs);
  const Eigen::MatrixXd cov2 = covariance_of(jtj);

  FitResult r;
  r.model = "gaussian_offset_fixed";
  r.names = {"A", "x0", "w", "C"};
  r.parameters = {{"A", sol[0]}, {"x0", center}, {"w", width}, {"C", sol[1]}};
  r.uncertainties = {{"A", std::sqrt(cov2(0, 0))}, {"x0", 0.0}, {"w", 0.0}, {"C", std::sqrt(cov2(1, 1))}};
  r.covariance.assign(16, 0.0);
  r.covariance[0] = cov2(0, 0);
  r.covariance[3] = cov2(0, 1);
  r.covariance[12] = cov2(1, 0);
  r.covariance[15] = cov2(1, 1);
  r.residual_sum_squares = (rhs - jac * sol).squaredNorm();
  r.converged = sol.allFinite();
  r.iterations = 1;
  r.message = "linear solve with fixed centre and width";
  return r;
}

FitResult fit_sin2_offset(std::span<const double> theta_deg, std::span<const double> y, Sin2Mode mode,
                          const FitOptions& opts) {
  check_xy(theta_deg, y, 4);
  const int k = harmonic(mode);
  LmProblem prob{mode == Sin2Mode::hwp_2theta ? "sin2_offset_hwp" : "sin2_offset_rotation",
                 {"A", "theta0", "C"},
                 theta_deg,
                 y,
                 poisson_sigma(y),
                 [k](double xi, const Eigen::VectorXd& p) {
                   return model::sin2_offset(xi, std::span<const double, 3>(p.data(), 3), k);
                 },
                 [k](double xi, const Eigen::VectorXd& p) {
                   const auto g = model::sin2_offset_gradient(xi, std::span<const double, 3>(p.data(), 3), k);
                   return Eigen::Vector3d(g[0], g[1], g[2]).eval();
                 }};

  // Seed from the exact linear form a0 + a1 cos(2k theta) + a2 sin(2k theta).
  const auto m = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd basis(m, 3);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = static_cast<std::size_t>(i);
    const double u = 2.0 * k * theta_deg[j] * kDegToRad;
    basis.row(i) << 1.0 / prob.sigma[j], std::cos(u) / prob.sigma[j], std::sin(u) / prob.sigma[j];
    rhs[i] = y[j] / prob.sigma[j];
  }
  const Eigen::Vector3d a = basis.colPivHouseholderQr().solve(rhs);
  const double amp = 2.0 * std::hypot(a[1], a[2]);
  const double theta0 = amp > 0.0 ? std::atan2(-a[2], -a[1]) / (2.0 * k * kDegToRad) : 0.0;
  Eigen::VectorXd p0(3);
  p0 << amp, theta0, a[0] - amp / 2.0;

  FitResult r = levenberg_marquardt(prob, p0, opts);
  // theta0 is periodic in 180/k degrees; report it in (-90/k, 90/k].
  const double period = 180.0 / k;
  double t0 = std::fmod(r.parameters["theta0"], period);
  if (t0 > period / 2.0) t0 -= period;
  if (t0 <= -period / 2.0) t0 += period;
  r.parameters["theta0"] = t0;
  return r;
}

FitResult fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
                   bool fit_intercept) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  if (x.size() < 2) throw std::invalid_argument("line fit needs at least 2 points");
  const bool weighted = sigma.size() == x.size() &&
                        std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
  const std::size_t n_params = fit_intercept ? 2 : 1;

  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd jac(m, static_cast<Eigen::Index>(n_params));
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double w = weighted ? 1.0 / sigma[k] : 1.0;
    jac(i, 0) = x[k] * w;
    if (fit_intercept) jac(i, 1) = w;
    rhs[i] = y[k] * w;
  }
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  lu.setThreshold(1e-12);
  const bool distinct = std::any_of(x.begin(), x.end(), [&](double v) { return v != x.front(); });
  if (!lu.isInvertible() || (fit_intercept && !distinct)) {
    throw std::invalid_argument("line fit is degenerate: the x values do not determine the slope");
  }
  const Eigen::VectorXd sol = lu.solve(jac.transpose() * rhs);
  const double chi2 = (rhs - jac * sol).squaredNorm();
  Eigen::MatrixXd cov = lu.inverse();
  if (!weighted) {
    const auto dof = static_cast<double>(x.size()) - static_cast<double>(n_params);
    cov *= dof > 0 ? chi2 / dof : 0.0;
  }

  FitResult r;
  r.model = "linear";
  r.names = {"slope", "intercept"};
  r.parameters = {{"slope", sol[0]}, {"intercept", fit_intercept ? sol[1] : 0.0}};
  r.uncertainties = {{"slope", std::sqrt(cov(0, 0))}, {"intercept", fit_intercept ? std::sqrt(cov(1, 1)) : 0.0}};
  r.covariance.assign(4, 0.0);
  r.covariance[0] = cov(0, 0);
  if (fit_intercept) {
    r.covariance[1] = cov(0, 1);
    r.covariance[2] = cov(1, 0);
    r.covariance[3] = cov(1, 1);
  }
  r.residual_sum_squares = chi2;
  r.converged = true;
  r.iterations = 1;
  r.message = weighted ? "weighted linear solve" : "unweighted linear solve";
  return r;
}

}  // namespace biphoton
