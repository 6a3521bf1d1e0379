#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's own numerics.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ecd/core.hpp"
#include "ecd/objectives.hpp"

namespace oracle {

using ecd::Index;
using ecd::Matrix;
using ecd::Vector;

inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

inline Vector fd_gradient(const ecd::Objective& f, const Vector& x) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f.value(xp) - f.value(xm)) / (xp[i] - xm[i]);
  }
  return g;
}

/// Central differences of the analytic gradient, symmetrized.
inline Matrix fd_hessian(const ecd::Objective& f, const Vector& x) {
  const Index n = x.size();
  Matrix h(n, n);
  for (Index j = 0; j < n; ++j) {
    const double s = fd_step(x[j]);
    Vector xp = x;
    Vector xm = x;
    xp[j] += s;
    xm[j] -= s;
    h.col(j) = (f.gradient(xp) - f.gradient(xm)) / (xp[j] - xm[j]);
  }
  return 0.5 * (h + h.transpose());
}

struct Case {
  std::string label;
  std::unique_ptr<ecd::Objective> objective;
  double box;
};

/// Benchmarks with the boxes their test points are drawn from.
inline std::vector<Case> benchmark_cases() {
  std::vector<Case> out;
  out.push_back({"ackley", std::make_unique<ecd::Ackley>(), 4.0});
  out.push_back({"zakharov2", std::make_unique<ecd::Zakharov>(2), 2.0});
  out.push_back({"zakharov10", std::make_unique<ecd::Zakharov>(10), 1.5});
  out.push_back({"two_basin", std::make_unique<ecd::TwoBasin>(2.76e-6), 4.0});
  out.push_back({"quadratic1", std::make_unique<ecd::ShallowQuadratic>(0.7, 1), 4.0});
  out.push_back({"quadratic3", std::make_unique<ecd::ShallowQuadratic>(1.3, 3), 4.0});
  return out;
}

/// Uniform point in [-box, box]^n; Ackley points stay off the origin kink.
inline Vector sample_point(ecd::Rng& rng, Index n, double box) {
  Vector x(n);
  do {
    for (Index i = 0; i < n; ++i) x[i] = box * (2.0 * rng.uniform() - 1.0);
  } while (x.norm() < 1e-2);
  return x;
}

/// Relative error with the scale floored at 1 so near-zero gradients are
/// compared absolutely.
inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// Radial volume integral through its hypergeometric representation:
/// (V^(-n/2)/n) 2F1(n/2, n/2; n/2 + 1; -1/(2V)), evaluated from the Euler
/// integral 2F1(a,b;a+1;z) = a int_0^1 t^(a-1) (1 - z t)^(-b) dt after the
/// substitution t = eta^2.
inline double hypergeometric_radial(double v, int n) {
  const double a = 0.5 * n;
  boost::math::quadrature::tanh_sinh<double> ts;
  auto integrand = [&](double t) { return std::pow(t, a - 1.0) * std::pow(1.0 + t / (2.0 * v), -a); };
  const double f21 = a * ts.integrate(integrand, 0.0, 1.0, 1e-14);
  return std::pow(v, -a) / n * f21;
}

inline double radial_closed_form_n2(double v) { return std::log1p(1.0 / (2.0 * v)); }

}  // namespace oracle
