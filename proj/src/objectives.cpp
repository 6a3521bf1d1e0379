#include "ecd/objectives.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

namespace ecd {

void Objective::check_dim(const Vector& theta) const {
  if (theta.size() != dim()) {
    throw Error(ErrorKind::DimensionMismatch, name() + " expects dimension " +
                                                  std::to_string(dim()) + ", got " +
                                                  std::to_string(theta.size()));
  }
}

// ---------------------------------------------------------------- Ackley

double Ackley::do_value(const Vector& t) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r = std::sqrt(0.5 * t.squaredNorm());
  const double c = 0.5 * (std::cos(two_pi * t[0]) + std::cos(two_pi * t[1]));
  return -20.0 * std::exp(-0.2 * r) - std::exp(c) + std::numbers::e + 20.0;
}

Vector Ackley::do_gradient(const Vector& t) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Vector g = Vector::Zero(2);
  const double r = std::sqrt(0.5 * t.squaredNorm());
  const double ec = std::exp(0.5 * (std::cos(two_pi * t[0]) + std::cos(two_pi * t[1])));
  // The radial term is not differentiable at the origin; 0 is used there.
  const double radial = r > 0.0 ? 2.0 * std::exp(-0.2 * r) / r : 0.0;
  for (Index i = 0; i < 2; ++i) {
    g[i] = radial * t[i] + std::numbers::pi * std::sin(two_pi * t[i]) * ec;
  }
  if (r == 0.0) g.setZero();
  return g;
}

// ---------------------------------------------------------------- Zakharov

Zakharov::Zakharov(Index n) : n_(n), half_weights_(n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "zakharov needs n >= 1");
  for (Index i = 0; i < n; ++i) half_weights_[i] = 0.5 * static_cast<double>(i + 1);
}

double Zakharov::do_value(const Vector& t) const {
  const double s = half_weights_.dot(t);
  const double s2 = s * s;
  return t.squaredNorm() + s2 + s2 * s2;
}

Vector Zakharov::do_gradient(const Vector& t) const {
  const double s = half_weights_.dot(t);
  return 2.0 * t + (2.0 * s + 4.0 * s * s * s) * half_weights_;
}

std::optional<Matrix> Zakharov::do_hessian(const Vector& t) const {
  const double s = half_weights_.dot(t);
  // The outer product is formed first so that h is exactly symmetric.
  const Matrix outer = half_weights_ * half_weights_.transpose();
  Matrix h = (2.0 + 12.0 * s * s) * outer;
  h.diagonal().array() += 2.0;
  return h;
}

// ---------------------------------------------------------------- TwoBasin

namespace {
constexpr double kWidth1 = 0.4;
constexpr double kWidth2 = 0.8;
constexpr double kCoupling = 1e-3;
}  // namespace

TwoBasin::TwoBasin(double epsilon) : epsilon_(epsilon) {}

Vector TwoBasin::center1() { return Vector::Constant(2, -2.0); }
Vector TwoBasin::center2() { return Vector::Constant(2, 2.0); }

double TwoBasin::do_value(const Vector& t) const {
  const double d1 = (t - center1()).squaredNorm();
  const double d2 = (t - center2()).squaredNorm();
  // 1 - exp(-a) written as -expm1(-a) so the wells resolve values near 0.
  return -std::expm1(-kWidth1 * d1) - (1.0 - epsilon_) * std::exp(-kWidth2 * d2) +
         kCoupling * d1 * d2;
}

Vector TwoBasin::do_gradient(const Vector& t) const {
  const Vector u1 = t - center1();
  const Vector u2 = t - center2();
  const double d1 = u1.squaredNorm();
  const double d2 = u2.squaredNorm();
  const double g1 = 2.0 * kWidth1 * std::exp(-kWidth1 * d1);
  const double g2 = 2.0 * kWidth2 * (1.0 - epsilon_) * std::exp(-kWidth2 * d2);
  return g1 * u1 + g2 * u2 + 2.0 * kCoupling * (d2 * u1 + d1 * u2);
}

std::optional<Matrix> TwoBasin::do_hessian(const Vector& t) const {
  const Vector u1 = t - center1();
  const Vector u2 = t - center2();
  const double d1 = u1.squaredNorm();
  const double d2 = u2.squaredNorm();
  const Matrix id = Matrix::Identity(2, 2);
  const double g1 = 2.0 * kWidth1 * std::exp(-kWidth1 * d1);
  const double g2 = 2.0 * kWidth2 * (1.0 - epsilon_) * std::exp(-kWidth2 * d2);
  Matrix h = g1 * (id - 2.0 * kWidth1 * u1 * u1.transpose()) +
             g2 * (id - 2.0 * kWidth2 * u2 * u2.transpose());
  h += kCoupling * (2.0 * (d1 + d2) * id + 4.0 * (u1 * u2.transpose() + u2 * u1.transpose()));
  return h;
}

// ---------------------------------------------------------------- quadratic

ShallowQuadratic::ShallowQuadratic(double m, Index n) : m_(m), n_(n) {
  if (!(m > 0)) throw Error(ErrorKind::InvalidArgument, "quadratic needs m > 0");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "quadratic needs n >= 1");
}

double ShallowQuadratic::do_value(const Vector& t) const { return 0.5 * m_ * m_ * t.squaredNorm(); }

Vector ShallowQuadratic::do_gradient(const Vector& t) const { return m_ * m_ * t; }

std::optional<Matrix> ShallowQuadratic::do_hessian(const Vector&) const {
  return Matrix(m_ * m_ * Matrix::Identity(n_, n_));
}

// ---------------------------------------------------------------- free functions

double ackley(const Vector& theta) { return Ackley{}.value(theta); }
double zakharov(const Vector& theta) { return Zakharov{theta.size()}.value(theta); }
double two_basin(const Vector& theta, double epsilon) { return TwoBasin{epsilon}.value(theta); }
double shallow_quadratic(double m, const Vector& theta) {
  return ShallowQuadratic{m, theta.size()}.value(theta);
}

// ---------------------------------------------------------------- minima

MinimumRefinement refine_minimum(const Objective& objective, const Vector& start, double grad_tol,
                                 double step, long long max_iters) {
  Vector x = start;
  double f = objective.value(x);
  Vector g = objective.gradient(x);
  for (long long it = 0; it < max_iters; ++it) {
    const double gn = g.norm();
    if (!std::isfinite(f) || !std::isfinite(gn)) break;
    if (gn < grad_tol) return {x, f, gn, it};
    // Increases within the rounding of f are accepted: near the minimum the
    // true decrease s*|g|^2 falls below the resolution of f.
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    double s = step;
    Vector trial = x - s * g;
    double ft = objective.value(trial);
    while (ft > f + noise && s > step * 1e-12) {
      s *= 0.5;
      trial = x - s * g;
      ft = objective.value(trial);
    }
    x = trial;
    f = ft;
    g = objective.gradient(x);
  }
  throw Error(ErrorKind::RefinementFailed, "gradient descent did not reach the gradient tolerance");
}

double two_basin_height_gap(double epsilon) {
  const TwoBasin f(epsilon);
  const double f1 = refine_minimum(f, TwoBasin::center1()).value;
  const double f2 = refine_minimum(f, TwoBasin::center2()).value;
  return f2 - f1;
}

double calibrate_epsilon() {
  double lo = 0.0;
  double hi = 1e-4;
  const double gap_lo = two_basin_height_gap(lo);
  const double gap_hi = two_basin_height_gap(hi);
  if (!(gap_lo < 0.0 && gap_hi > 0.0)) {
    throw Error(ErrorKind::CalibrationFailed, "well-height gap does not change sign on [0, 1e-4]");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gap = two_basin_height_gap(mid);
    if (std::abs(gap) < 1e-15) return mid;
    (gap < 0.0 ? lo : hi) = mid;
  }
  const double eps = 0.5 * (lo + hi);
  if (std::abs(two_basin_height_gap(eps)) >= 1e-12) {
    throw Error(ErrorKind::CalibrationFailed, "bisection stalled above the 1e-12 height tolerance");
  }
  return eps;
}

namespace {
double calibrated_epsilon_cached() {
  static std::once_flag once;
  static double value = 0.0;
  std::call_once(once, [] { value = calibrate_epsilon(); });
  return value;
}
}  // namespace

std::unique_ptr<Objective> make_objective(const ObjectiveConfig& cfg) {
  if (cfg.name == "ackley") {
    if (cfg.dim != 2) throw Error(ErrorKind::DimensionMismatch, "ackley is two-dimensional");
    return std::make_unique<Ackley>();
  }
  if (cfg.name == "zakharov") return std::make_unique<Zakharov>(cfg.dim);
  if (cfg.name == "two_basin") {
    if (cfg.dim != 2) throw Error(ErrorKind::DimensionMismatch, "two_basin is two-dimensional");
    return std::make_unique<TwoBasin>(cfg.epsilon ? *cfg.epsilon : calibrated_epsilon_cached());
  }
  if (cfg.name == "quadratic") return std::make_unique<ShallowQuadratic>(cfg.m, cfg.dim);
  throw Error(ErrorKind::InvalidArgument, "unknown objective '" + cfg.name + "'");
}

}  // namespace ecd
