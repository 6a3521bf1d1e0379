#include "ecd/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <tuple>
#include <utility>

namespace ecd {

Matrix numerical_hessian(const Objective& objective, const Vector& theta) {
  const Index n = theta.size();
  Vector h(n);
  for (Index i = 0; i < n; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(theta[i]));

  auto f = [&](const Vector& x) {
    const double v = objective.value(x);
    if (!std::isfinite(v)) throw Error(ErrorKind::Diverged, "non-finite value in Hessian stencil");
    return v;
  };

  const double f0 = f(theta);
  Matrix hess(n, n);
  Vector x = theta;
  for (Index i = 0; i < n; ++i) {
    x[i] = theta[i] + h[i];
    const double fp = f(x);
    x[i] = theta[i] - h[i];
    const double fm = f(x);
    x[i] = theta[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);

    for (Index j = i + 1; j < n; ++j) {
      x[i] = theta[i] + h[i];
      x[j] = theta[j] + h[j];
      const double fpp = f(x);
      x[j] = theta[j] - h[j];
      const double fpm = f(x);
      x[i] = theta[i] - h[i];
      const double fmm = f(x);
      x[j] = theta[j] + h[j];
      const double fmp = f(x);
      x[i] = theta[i];
      x[j] = theta[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

// ------------------------------------------------------------ quadrature

namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for Kronrod nodes 1, 3, 5 and the center.
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gauss_kronrod_panel(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int k = 0; k < 7; ++k) {
    const double dx = half * kKronrodNodes[k];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[k] * pair;
    if (k % 2 == 1) gauss += kGaussWeights[k / 2] * pair;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult integrate_gauss_kronrod(const std::function<double(double)>& f, double a,
                                         double b, double rel_tol, int max_subdivisions) {
  // Panels stay ordered by position so the sum is independent of the
  // refinement history.
  std::vector<Panel> panels{gauss_kronrod_panel(f, a, b)};
  auto totals = [&] {
    double value = 0.0, error = 0.0;
    for (const auto& p : panels) {
      value += p.value;
      error += p.error;
    }
    return std::pair{value, error};
  };
  auto [total, error] = totals();
  while (error > rel_tol * std::abs(total) && static_cast<int>(panels.size()) < max_subdivisions) {
    const auto worst = std::max_element(panels.begin(), panels.end());
    const double mid = 0.5 * (worst->a + worst->b);
    const Panel right = gauss_kronrod_panel(f, mid, worst->b);
    *worst = gauss_kronrod_panel(f, worst->a, mid);
    panels.insert(worst + 1, right);
    std::tie(total, error) = totals();
  }
  return {total, error, static_cast<int>(panels.size()), error <= rel_tol * std::abs(total)};
}

double basin_radial_volume(double v_i, int n, int max_subdivisions) {
  if (!(v_i > 0.0)) throw Error(ErrorKind::DomainError, "radial volume needs V_I > 0");
  if (n < 1) throw Error(ErrorKind::DomainError, "radial volume needs n >= 1");
  const double half_n = 0.5 * n;
  auto integrand = [&](double eta) {
    return std::pow(eta, n - 1) / std::pow(v_i + 0.5 * eta * eta, half_n);
  };
  // The integrand varies on the scale sqrt(V_I); split there so the first
  // panel does not straddle the peak.
  const double knee = std::min(0.5, std::sqrt(v_i));
  const auto inner = integrate_gauss_kronrod(integrand, 0.0, knee, 1e-10, max_subdivisions);
  const auto outer = integrate_gauss_kronrod(integrand, knee, 1.0, 1e-10, max_subdivisions);
  return inner.value + outer.value;
}

BasinSpec make_basin_spec(const Objective& objective, const Vector& location, double v_min) {
  const Matrix h = numerical_hessian(objective, location);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::DomainError, "Hessian eigen-decomposition failed");
  }
  const Vector ev = solver.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw Error(ErrorKind::DomainError, "Hessian is not positive definite at the minimum");
  }
  return {location, v_min, ev};
}

VolumeEstimate basin_volume(const BasinSpec& basin, double energy) {
  if (!(energy > 0.0)) throw Error(ErrorKind::DomainError, "energy must be positive");
  if (!(basin.hessian_eigenvalues.size() > 0 && basin.hessian_eigenvalues.minCoeff() > 0.0)) {
    throw Error(ErrorKind::DomainError, "basin needs positive Hessian eigenvalues");
  }
  const int n = static_cast<int>(basin.dim());
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  VolumeEstimate out;
  out.prefactor = sphere * sphere * std::pow(energy, n - 1) / basin.mass_product();
  out.radial = basin_radial_volume(basin.v_min, n);
  out.volume = out.prefactor * out.radial;
  out.regime_warning = !(basin.v_min < 0.1 * energy);
  return out;
}

VolumePrediction predict_volumes(const Objective& objective, const std::vector<Vector>& starts,
                                 double energy, double v_floor) {
  if (starts.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one basin start");
  if (!(v_floor > 0.0)) throw Error(ErrorKind::DomainError, "v_floor must be positive");
  std::vector<MinimumRefinement> minima;
  for (const auto& s : starts) minima.push_back(refine_minimum(objective, s));
  double lowest = minima.front().value;
  for (const auto& m : minima) lowest = std::min(lowest, m.value);

  VolumePrediction out;
  for (const auto& m : minima) {
    out.basins.push_back(make_basin_spec(objective, m.location, m.value - lowest + v_floor));
    out.volumes.push_back(basin_volume(out.basins.back(), energy));
  }
  for (const auto& v : out.volumes) out.ratios_to_first.push_back(out.volumes.front().volume / v.volume);
  return out;
}

double nonrelativistic_volume_weight(double v, double energy, int n) {
  if (!(v >= 0.0 && v < energy)) {
    throw Error(ErrorKind::DomainError, "non-relativistic weight needs 0 <= V < E");
  }
  return std::pow(energy - v, 0.5 * (n - 2));
}

TraceWindow asymptotic_window(double energy, double eps2) {
  return [energy, eps2](const TraceRecord& r) {
    return r.v / energy < 0.01 && r.v > 1e3 * eps2;
  };
}

double fit_decay_rate(const std::vector<TraceRecord>& trace, double dt,
                      const TraceWindow& window) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  long long count = 0;
  for (const auto& r : trace) {
    if (!window(r) || !(r.theta_norm > 0.0)) continue;
    const double t = static_cast<double>(r.step) * dt;
    const double y = std::log(r.theta_norm);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  if (count < 10) {
    throw Error(ErrorKind::InsufficientData, "decay fit window holds fewer than 10 points");
  }
  const double k = static_cast<double>(count);
  const double slope = (k * sty - st * sy) / (k * stt - st * st);
  return -slope;
}

}  // namespace ecd
