#pragma once

#include <functional>
#include <optional>
#include <string>

#include "ecd/core.hpp"
#include "ecd/objectives.hpp"

namespace ecd {

struct GdmHyperParams {
  double eta = 1e-3;
  /// Momentum coefficient, 0 <= mu < 1.
  double mu = 0.9;
  double dV = 0.0;
  double eps2 = 1e-40;
  long long max_iters = 100000;

  void validate() const;

  friend bool operator==(const GdmHyperParams&, const GdmHyperParams&) = default;
};

/// What happened inside one stepping-branch iteration.
struct StepInfo {
  double v_before = 0.0;
  /// Target Pi^2 for the current V (may be negative).
  double pi_c2 = 0.0;
  bool rescaled = false;
  /// Pi^2 right after the rescaling sub-step, before the kick.
  double pi2_after_rescale = 0.0;
  /// |Pi| V / E (BBI) or |Pi| V (massive ECD) from the rescaled momentum.
  double rescaled_drift_speed = 0.0;
  /// ||Theta_t - Theta_{t-1}||
  double displacement = 0.0;
  bool adapted_dV = false;
  std::optional<StopReason> stop;
};

struct RunOptions {
  /// Record every k-th step (plus step 0); 0 disables tracing.
  long long trace_every = 0;
  /// Called every `epoch_every` steps with the live state; for time-dependent
  /// objectives this is where the sample set gets swapped. V is re-evaluated
  /// afterwards.
  long long epoch_every = 0;
  std::function<void(EcdState&)> on_epoch;
  /// Observer invoked after each stepping-branch iteration.
  std::function<void(const EcdState&, const StepInfo&)> on_step;
};

// ------------------------------------------------------------------ BBI

/// Initial state: E = V0 + dE, Pi0 along -grad F with |Pi0|^2 = E^2/V0 - V0.
EcdState bbi_init(const Objective& objective, const Vector& theta0, const BbiHyperParams& hp,
                  std::uint64_t seed);

/// One iteration of the non-bounce branch: restore |Pi|, kick, drift, and
/// refresh V and the counters.
StepInfo bbi_step(EcdState& state, const Objective& objective, const BbiHyperParams& hp);

/// True when the next iteration takes the bounce branch.
bool bounce_due(const EcdState& state, const BbiHyperParams& hp);

/// Random momentum direction at fixed |Pi| plus the counter bookkeeping.
void bbi_bounce(EcdState& state, const BbiHyperParams& hp);

RunSummary bbi_run(const Objective& objective, const Vector& theta0, const BbiHyperParams& hp,
                   std::uint64_t seed, const RunOptions& opts = {});

// ------------------------------------------------------------ massive ECD

/// Hamiltonian H = V Pi^2 / 2 (mass 1/V). E = V0 + dE, |Pi0| = sqrt(2E/V0).
EcdState massive_ecd_init(const Objective& objective, const Vector& theta0,
                          const BbiHyperParams& hp, std::uint64_t seed);

StepInfo massive_ecd_step(EcdState& state, const Objective& objective, const BbiHyperParams& hp);

RunSummary massive_ecd_run(const Objective& objective, const Vector& theta0,
                           const BbiHyperParams& hp, std::uint64_t seed,
                           const RunOptions& opts = {});

// --------------------------------------------------------------------- GDM

/// v <- mu v - grad F, theta <- theta + eta v.
RunSummary gdm_run(const Objective& objective, const Vector& theta0, const GdmHyperParams& hp,
                   const RunOptions& opts = {});

// ------------------------------------------------------------ by name

/// Optimizer selected by name: "bbi", "mecd" or "gdm".
struct OptimizerSpec {
  std::string name = "bbi";
  BbiHyperParams bbi;
  GdmHyperParams gdm;

  long long max_iters() const;
  void set_max_iters(long long n);
  /// Sets a numeric hyperparameter by key (dt, dV, dE, T0, T1, Nb, eps1,
  /// eps2, eta, mu, max_iters). Throws InvalidArgument for unknown keys.
  void set(const std::string& key, double value);
  void validate() const;

  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

RunSummary run_optimizer(const OptimizerSpec& spec, const Objective& objective,
                         const Vector& theta0, std::uint64_t seed, const RunOptions& opts = {});

}  // namespace ecd
