#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ecd/core.hpp"

namespace ecd {

/// Differentiable scalar field F(theta) with an exact gradient.
///
/// Public entry points check the dimension and forward to the protected
/// hooks. `resample` is the only mutating operation; it stands for the
/// minibatch-style time dependence V(theta, t). The bundled benchmarks are
/// deterministic and leave it as a no-op.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  double value(const Vector& theta) const {
    check_dim(theta);
    return do_value(theta);
  }
  Vector gradient(const Vector& theta) const {
    check_dim(theta);
    return do_gradient(theta);
  }
  /// Analytic Hessian when the objective provides one.
  std::optional<Matrix> hessian(const Vector& theta) const {
    check_dim(theta);
    return do_hessian(theta);
  }

  virtual void resample(Rng& /*epoch_rng*/) {}

 protected:
  virtual double do_value(const Vector& theta) const = 0;
  virtual Vector do_gradient(const Vector& theta) const = 0;
  virtual std::optional<Matrix> do_hessian(const Vector&) const { return std::nullopt; }

  void check_dim(const Vector& theta) const;
};

/// Two-dimensional Ackley function; global minimum 0 at the origin.
class Ackley final : public Objective {
 public:
  Index dim() const override { return 2; }
  std::string name() const override { return "ackley"; }

 protected:
  double do_value(const Vector& theta) const override;
  Vector do_gradient(const Vector& theta) const override;
};

/// Zakharov function sum(t_i^2) + S^2 + S^4, S = 0.5 * sum(i * t_i), i from 1.
class Zakharov final : public Objective {
 public:
  explicit Zakharov(Index n);
  Index dim() const override { return n_; }
  std::string name() const override { return "zakharov"; }

 protected:
  double do_value(const Vector& theta) const override;
  Vector do_gradient(const Vector& theta) const override;
  std::optional<Matrix> do_hessian(const Vector& theta) const override;

 private:
  Index n_;
  Vector half_weights_;  // i / 2
};

/// Two Gaussian wells at c1 = (-2,-2) and c2 = (2,2), widths 0.4 and 0.8,
/// confined by a quartic product term. epsilon lowers the second well.
class TwoBasin final : public Objective {
 public:
  explicit TwoBasin(double epsilon = 0.0);
  Index dim() const override { return 2; }
  std::string name() const override { return "two_basin"; }

  double epsilon() const { return epsilon_; }
  static Vector center1();
  static Vector center2();

 protected:
  double do_value(const Vector& theta) const override;
  Vector do_gradient(const Vector& theta) const override;
  std::optional<Matrix> do_hessian(const Vector& theta) const override;

 private:
  double epsilon_;
};

/// 0.5 * m^2 * |theta|^2 (one-dimensional by default).
class ShallowQuadratic final : public Objective {
 public:
  explicit ShallowQuadratic(double m, Index n = 1);
  Index dim() const override { return n_; }
  std::string name() const override { return "quadratic"; }
  double mass() const { return m_; }

 protected:
  double do_value(const Vector& theta) const override;
  Vector do_gradient(const Vector& theta) const override;
  std::optional<Matrix> do_hessian(const Vector& theta) const override;

 private:
  double m_;
  Index n_;
};

// Free-function forms of the benchmarks.
double ackley(const Vector& theta);
double zakharov(const Vector& theta);
double two_basin(const Vector& theta, double epsilon);
double shallow_quadratic(double m, const Vector& theta);

struct MinimumRefinement {
  Vector location;
  double value = 0.0;
  double grad_norm = 0.0;
  long long iterations = 0;
};

/// Damped gradient descent with backtracking from `start` until
/// ||grad|| < grad_tol. Throws RefinementFailed when the budget runs out.
MinimumRefinement refine_minimum(const Objective& objective, const Vector& start,
                                 double grad_tol = 1e-10, double step = 1e-2,
                                 long long max_iters = 2'000'000);

/// epsilon in [0, 1e-4] for which the two refined wells of TwoBasin have
/// equal height to 1e-12. Throws CalibrationFailed when no root is bracketed.
double calibrate_epsilon();

/// Difference F(min2) - F(min1) of the refined wells at a given epsilon.
double two_basin_height_gap(double epsilon);

struct ObjectiveConfig {
  std::string name = "two_basin";
  Index dim = 2;
  double m = 1.0;
  /// two_basin only; calibrated when absent.
  std::optional<double> epsilon;
};

/// Builds "ackley", "zakharov", "two_basin" or "quadratic".
std::unique_ptr<Objective> make_objective(const ObjectiveConfig& cfg);

}  // namespace ecd
