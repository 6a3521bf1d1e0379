#pragma once

#include <functional>
#include <vector>

#include "ecd/core.hpp"
#include "ecd/objectives.hpp"

namespace ecd {

/// Central-difference Hessian from function values, step
/// h_i = 1e-4 * max(1, |theta_i|), symmetrized as (H + H^T) / 2.
Matrix numerical_hessian(const Objective& objective, const Vector& theta);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

/// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]: the interval with
/// the largest error estimate is bisected until the summed estimate is below
/// rel_tol * |I| or `max_subdivisions` intervals exist.
QuadratureResult integrate_gauss_kronrod(const std::function<double(double)>& f, double a,
                                         double b, double rel_tol = 1e-9,
                                         int max_subdivisions = 2000);

/// Radial integral  int_0^1 eta^(n-1) / (v_i + eta^2/2)^(n/2) d eta
/// over a quadratic well of depth v_i in n dimensions. Throws DomainError for
/// v_i <= 0 (the integral diverges at n >= 2).
double basin_radial_volume(double v_i, int n, int max_subdivisions = 2000);

/// A quadratic minimum: location, height and Hessian spectrum m_i^2.
struct BasinSpec {
  Vector minimum_location;
  double v_min = 0.0;
  Vector hessian_eigenvalues;

  Index dim() const { return hessian_eigenvalues.size(); }
  /// Positive square roots m_i of the eigenvalues.
  Vector masses() const { return hessian_eigenvalues.cwiseSqrt(); }
  double mass_product() const { return masses().prod(); }
};

/// Hessian at `location` (numerical) diagonalized into a BasinSpec. Throws
/// DomainError unless the Hessian is positive definite.
BasinSpec make_basin_spec(const Objective& objective, const Vector& location, double v_min);

struct VolumeEstimate {
  double volume = 0.0;
  /// (2 pi^(n/2) / Gamma(n/2))^2 E^(n-1) / prod m_i
  double prefactor = 0.0;
  double radial = 0.0;
  /// Set when v_min >= 0.1 E, outside the small-V regime of the formula.
  bool regime_warning = false;
};

/// Phase-space volume of a basin at energy E (radius eta = 1 in the
/// Hessian-normalized coordinates).
VolumeEstimate basin_volume(const BasinSpec& basin, double energy);

/// (E - V)^((n-2)/2), the volume weight of frictionless non-relativistic
/// motion, for comparison with the BI weight.
double nonrelativistic_volume_weight(double v, double energy, int n);

struct VolumePrediction {
  std::vector<BasinSpec> basins;
  std::vector<VolumeEstimate> volumes;
  /// volumes[0] / volumes[k]; entry 0 is 1.
  std::vector<double> ratios_to_first;
};

/// Refines a minimum from each start, measures its Hessian and evaluates
/// the basin volumes at `energy`. Well heights are taken relative to the
/// lowest refined minimum plus `v_floor`, which stands in for the accuracy
/// shift that keeps V_I away from the log singularity.
VolumePrediction predict_volumes(const Objective& objective, const std::vector<Vector>& starts,
                                 double energy, double v_floor);

using TraceWindow = std::function<bool(const TraceRecord&)>;

/// V/E < 0.01 and V > 1e3 * eps2: the asymptotic shallow-valley regime.
TraceWindow asymptotic_window(double energy, double eps2);

/// Decay rate k of ||theta|| ~ exp(-k t), t = step * dt, by least squares
/// over the records selected by `window`. InsufficientData below 10 points.
double fit_decay_rate(const std::vector<TraceRecord>& trace, double dt, const TraceWindow& window);

}  // namespace ecd
