#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ecd/core.hpp"
#include "ecd/io.hpp"
#include "ecd/objectives.hpp"
#include "ecd/optimizers.hpp"

namespace ecd {

struct FixedPoint {
  Vector theta0;
};

/// Uniform sample from the box [lo, hi] per run.
struct UniformBox {
  Vector lo;
  Vector hi;
};

using InitStrategy = std::variant<FixedPoint, UniformBox>;

struct ExperimentConfig {
  ObjectiveConfig objective;
  OptimizerSpec optimizer;
  int n_runs = 1;
  std::uint64_t base_seed = 0;
  InitStrategy init = FixedPoint{};
  long long trace_every = 0;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate(Index dim) const;
};

ExperimentConfig experiment_config_from_json(const json& j);
json to_json(const ExperimentConfig& cfg);

/// Initial point of run `run_index`: the fixed point, or a box sample drawn
/// from a stream seeded by derive_seed(run_seed, 1).
Vector initial_point(const InitStrategy& init, std::uint64_t run_seed);

/// Runs cfg.n_runs independent runs with seeds derive_seed(base_seed, i).
/// Results are stored by run index; a failing run is recorded as Diverged
/// rather than aborting the batch.
std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, const Objective& objective);
std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg);

/// Index of the nearest center (ties go to the lowest index); nullopt when
/// the run did not reach its target.
std::optional<std::size_t> classify_basin(const RunSummary& run, const std::vector<Vector>& centers);
std::optional<std::size_t> classify_basin(const Vector& final_theta, const std::vector<Vector>& centers,
                                          bool converged);

struct BasinTally {
  std::vector<long long> counts;
  long long unresolved = 0;
  /// counts[0] / counts[1] after each completed run (inf while counts[1] = 0).
  std::vector<double> partial_ratios;
  std::vector<std::optional<std::size_t>> labels;

  long long completed() const;
  double final_ratio() const { return partial_ratios.empty() ? 0.0 : partial_ratios.back(); }
};

BasinTally tally_basins(const std::vector<RunSummary>& runs, const std::vector<Vector>& centers);

struct BasinExperimentResult {
  std::vector<Vector> minima;
  BasinTally tally;
  std::vector<RunSummary> runs;
};

/// BBI defaults for the two-well mixing experiment: Nb = 1, dt = 1e-2,
/// T0 = 20, T1 = 750, dE = 0, dV = 1e-3, started at (4, -4).
ExperimentConfig default_basin_config();

/// Runs the experiment on the two-well objective and labels every run by
/// its nearest refined minimum.
BasinExperimentResult basin_experiment(const ExperimentConfig& cfg);

struct RestartResult {
  std::vector<Vector> starts;
  /// success[i]: any restart from start i reached best F - dV < threshold.
  std::vector<bool> success;
  std::vector<std::vector<RunSummary>> runs;
  int successes() const;
};

/// cfg.n_runs start points from cfg.init, `restarts` seeded runs from each.
RestartResult restart_experiment(const ExperimentConfig& cfg, int restarts, double threshold);

// ------------------------------------------------------------ random search

enum class SampleScale { Linear, Log };

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  SampleScale scale = SampleScale::Linear;
};

struct SearchConfig {
  ObjectiveConfig objective;
  OptimizerSpec base;
  Vector theta0;
  std::vector<ParamRange> ranges;
  int trials = 100;
  long long steps_per_trial = 200;
  std::uint64_t base_seed = 0;
};

struct TrialRecord {
  int index = 0;
  std::vector<double> values;
  double score = 0.0;
  StopReason stop_reason = StopReason::MaxIters;
};

struct SearchResult {
  OptimizerSpec best;
  int best_trial = -1;
  double best_score = 0.0;
  std::vector<TrialRecord> trials;
};

/// Default ranges: dt in [1e-6, 1e-2] (log) for bbi/mecd; eta in [1e-10, 0.5]
/// (log) and mu in [0, 1) for gdm.
std::vector<ParamRange> default_search_ranges(const std::string& optimizer);

/// Uniform / log-uniform random search. Each trial runs steps_per_trial
/// steps and is scored by the lowest F seen; diverged trials are skipped.
SearchResult random_search(const SearchConfig& cfg, const Objective& objective);
SearchResult random_search(const SearchConfig& cfg);

}  // namespace ecd
