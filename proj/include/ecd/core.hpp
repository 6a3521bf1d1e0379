#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ecd {

/// Point in parameter space. Momenta and gradients share the same shape.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorKind {
  InvalidArgument,
  NonFiniteValue,
  DimensionMismatch,
  NonPositiveInitialLoss,
  Diverged,
  CalibrationFailed,
  RefinementFailed,
  DomainError,
  InsufficientData,
  SearchFailed,
  ParseError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// SplitMix64 stream. The whole state is one 64-bit counter which advances by
/// the golden-ratio increment 0x9E3779B97F4A7C15 and is passed through the
/// Stafford variant-13 finalizer (shifts 30/27/31, multipliers
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). Normals come from Box-Muller
/// without caching the second variate, so the state stays a single word.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  double normal();

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t state_;
};

/// The SplitMix64 finalizer on its own.
std::uint64_t mix64(std::uint64_t x);

/// Seed for run `run_index` of an experiment rooted at `base_seed`.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index);

/// Vector of iid standard normals drawn from `rng`.
Vector random_normal(Rng& rng, Index n);

/// Euclidean norm; throws NonFiniteValue on NaN/Inf components.
double vector_norm(const Vector& p);

bool all_finite(const Vector& p);

struct BbiHyperParams {
  double dt = 1e-2;
  double dV = 0.0;
  double dE = 0.0;
  long long T0 = 20;
  long long T1 = 100;
  long long Nb = 4;
  double eps1 = 1e-10;
  double eps2 = 1e-40;
  long long max_iters = 100000;
  bool adapt_dV = false;

  /// Throws InvalidArgument when a constraint is violated.
  void validate() const;

  friend bool operator==(const BbiHyperParams&, const BbiHyperParams&) = default;
};

enum class StopReason { Converged, MaxIters, NegativeLoss, Diverged };

std::string_view to_string(StopReason r);
StopReason stop_reason_from_string(std::string_view s);

/// True for the two outcomes where the shifted loss reached the target
/// (V <= eps2), i.e. Converged, or overshooting below zero (NegativeLoss).
inline bool reached_target(StopReason r) {
  return r == StopReason::Converged || r == StopReason::NegativeLoss;
}

/// Full state of an energy-conserving run (BBI or massive ECD).
struct EcdState {
  Vector theta;
  Vector pi;
  double energy = 0.0;
  double v_current = 0.0;
  double v_best = 0.0;
  /// Lowest raw objective seen; "new minimum" compares against this.
  double f_best = 0.0;
  /// Shift in effect. Differs from the hyperparameter once adaptation fires.
  double dV = 0.0;
  long long c0 = 0;
  long long c1 = 0;
  long long n_b = 0;
  long long step = 0;
  long long bounces = 0;
  Rng rng;

  friend bool operator==(const EcdState&, const EcdState&) = default;
};

struct TraceRecord {
  long long step = 0;
  double v = 0.0;
  double pi_norm = 0.0;
  /// ||Theta_t - Theta_{t-1}|| / dt
  double speed = 0.0;
  double energy_err = 0.0;
  bool bounce = false;
  /// Kept in memory for decay fits; not part of the CSV layout.
  double theta_norm = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct RunSummary {
  Vector final_theta;
  double final_v = 0.0;
  double final_f = 0.0;
  double best_f = 0.0;
  double final_dV = 0.0;
  StopReason stop_reason = StopReason::MaxIters;
  long long steps_taken = 0;
  long long bounce_count = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> trace;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

}  // namespace ecd
