#include "ecd/harness.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace ecd {

namespace {

/// Calls body(i) for i in [0, n) on `threads` workers. Each index is
/// processed exactly once; callers write results by index.
template <class Body>
void parallel_for(int n, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1)));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  }
}

RunSummary failed_run(const Vector& theta0, std::uint64_t seed) {
  RunSummary r;
  r.final_theta = theta0;
  r.final_v = r.final_f = r.best_f = std::numeric_limits<double>::quiet_NaN();
  r.stop_reason = StopReason::Diverged;
  r.seed = seed;
  return r;
}

RunSummary guarded_run(const OptimizerSpec& spec, const Objective& objective, const Vector& theta0,
                       std::uint64_t seed, const RunOptions& opts) {
  try {
    return run_optimizer(spec, objective, theta0, seed, opts);
  } catch (const Error&) {
    return failed_run(theta0, seed);
  }
}

}  // namespace

void ExperimentConfig::validate(Index dim) const {
  if (n_runs < 1) throw Error(ErrorKind::InvalidArgument, "n_runs must be >= 1");
  optimizer.validate();
  if (const auto* box = std::get_if<UniformBox>(&init)) {
    if (box->lo.size() != dim || box->hi.size() != dim) {
      throw Error(ErrorKind::DimensionMismatch, "box bounds do not match objective dimension");
    }
    if (!(box->lo.array() < box->hi.array()).all()) {
      throw Error(ErrorKind::InvalidArgument, "box bounds need lo < hi componentwise");
    }
  } else if (std::get<FixedPoint>(init).theta0.size() != dim) {
    throw Error(ErrorKind::DimensionMismatch, "theta0 does not match objective dimension");
  }
}

Vector initial_point(const InitStrategy& init, std::uint64_t run_seed) {
  if (const auto* fixed = std::get_if<FixedPoint>(&init)) return fixed->theta0;
  const auto& box = std::get<UniformBox>(init);
  Rng rng(derive_seed(run_seed, 1));
  Vector x(box.lo.size());
  for (Index i = 0; i < x.size(); ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform();
  return x;
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, const Objective& objective) {
  cfg.validate(objective.dim());
  std::vector<RunSummary> out(static_cast<std::size_t>(cfg.n_runs));
  RunOptions opts;
  opts.trace_every = cfg.trace_every;
  parallel_for(cfg.n_runs, cfg.threads, [&](int i) {
    const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] =
        guarded_run(cfg.optimizer, objective, initial_point(cfg.init, seed), seed, opts);
  });
  return out;
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg) {
  const auto objective = make_objective(cfg.objective);
  return run_experiment(cfg, *objective);
}

// ------------------------------------------------------------ basins

std::optional<std::size_t> classify_basin(const Vector& final_theta,
                                          const std::vector<Vector>& centers, bool converged) {
  if (!converged || centers.empty() || !final_theta.allFinite()) return std::nullopt;
  std::size_t best = 0;
  double best_d = (final_theta - centers[0]).squaredNorm();
  for (std::size_t k = 1; k < centers.size(); ++k) {
    const double d = (final_theta - centers[k]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::optional<std::size_t> classify_basin(const RunSummary& run, const std::vector<Vector>& centers) {
  return classify_basin(run.final_theta, centers, reached_target(run.stop_reason));
}

long long BasinTally::completed() const {
  long long total = unresolved;
  for (auto c : counts) total += c;
  return total;
}

BasinTally tally_basins(const std::vector<RunSummary>& runs, const std::vector<Vector>& centers) {
  BasinTally t;
  t.counts.assign(centers.size(), 0);
  for (const auto& run : runs) {
    const auto label = classify_basin(run, centers);
    t.labels.push_back(label);
    if (label) ++t.counts[*label];
    else ++t.unresolved;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (t.counts.size() >= 2) {
      ratio = t.counts[1] > 0 ? static_cast<double>(t.counts[0]) / static_cast<double>(t.counts[1])
                              : (t.counts[0] > 0 ? std::numeric_limits<double>::infinity()
                                                 : std::numeric_limits<double>::quiet_NaN());
    }
    t.partial_ratios.push_back(ratio);
  }
  return t;
}

ExperimentConfig default_basin_config() {
  ExperimentConfig cfg;
  cfg.objective.name = "two_basin";
  cfg.objective.dim = 2;
  cfg.optimizer.name = "bbi";
  cfg.optimizer.bbi.dt = 1e-2;
  cfg.optimizer.bbi.dV = 1e-3;
  cfg.optimizer.bbi.dE = 0.0;
  cfg.optimizer.bbi.T0 = 20;
  cfg.optimizer.bbi.T1 = 750;
  cfg.optimizer.bbi.Nb = 1;
  cfg.n_runs = 1000;
  cfg.base_seed = 2022;
  // Equidistant from both centers. With dE = 0 the energy must clear the
  // ridge between the wells: F on the bisector is at least F(0), so from the
  // origin the second well is unreachable.
  cfg.init = FixedPoint{(Vector(2) << 4.0, -4.0).finished()};
  return cfg;
}

BasinExperimentResult basin_experiment(const ExperimentConfig& cfg) {
  if (cfg.objective.name != "two_basin") {
    throw Error(ErrorKind::InvalidArgument, "basin experiment runs on the two_basin objective");
  }
  const auto objective = make_objective(cfg.objective);
  BasinExperimentResult out;
  out.minima = {refine_minimum(*objective, TwoBasin::center1()).location,
                refine_minimum(*objective, TwoBasin::center2()).location};
  out.runs = run_experiment(cfg, *objective);
  out.tally = tally_basins(out.runs, out.minima);
  return out;
}

int RestartResult::successes() const {
  int n = 0;
  for (bool s : success) n += s ? 1 : 0;
  return n;
}

RestartResult restart_experiment(const ExperimentConfig& cfg, int restarts, double threshold) {
  if (restarts < 1) throw Error(ErrorKind::InvalidArgument, "restarts must be >= 1");
  const auto objective = make_objective(cfg.objective);
  cfg.validate(objective->dim());
  const double dV = cfg.optimizer.name == "gdm" ? cfg.optimizer.gdm.dV : cfg.optimizer.bbi.dV;

  RestartResult out;
  const auto n = static_cast<std::size_t>(cfg.n_runs);
  out.starts.resize(n);
  out.success.assign(n, false);
  out.runs.assign(n, std::vector<RunSummary>(static_cast<std::size_t>(restarts)));
  for (std::size_t i = 0; i < n; ++i) {
    out.starts[i] = initial_point(cfg.init, derive_seed(cfg.base_seed, i));
  }
  RunOptions opts;
  opts.trace_every = cfg.trace_every;
  parallel_for(cfg.n_runs * restarts, cfg.threads, [&](int k) {
    const auto i = static_cast<std::size_t>(k / restarts);
    const auto r = static_cast<std::size_t>(k % restarts);
    const std::uint64_t seed = derive_seed(derive_seed(cfg.base_seed, i), 100 + r);
    out.runs[i][r] = guarded_run(cfg.optimizer, *objective, out.starts[i], seed, opts);
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& run : out.runs[i]) {
      if (run.best_f - dV < threshold) out.success[i] = true;
    }
  }
  return out;
}

// ------------------------------------------------------------ search

std::vector<ParamRange> default_search_ranges(const std::string& optimizer) {
  if (optimizer == "gdm") {
    return {{"eta", 1e-10, 0.5, SampleScale::Log}, {"mu", 0.0, 1.0, SampleScale::Linear}};
  }
  if (optimizer == "bbi" || optimizer == "mecd") return {{"dt", 1e-6, 1e-2, SampleScale::Log}};
  throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + optimizer + "'");
}

namespace {
double sample(const ParamRange& r, Rng& rng) {
  const double u = rng.uniform();
  if (r.lo == r.hi) return r.lo;
  if (r.scale == SampleScale::Log) {
    return std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo)));
  }
  return r.lo + u * (r.hi - r.lo);
}
}  // namespace

SearchResult random_search(const SearchConfig& cfg, const Objective& objective) {
  if (cfg.trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
  for (const auto& r : cfg.ranges) {
    if (!(r.lo <= r.hi)) throw Error(ErrorKind::InvalidArgument, "range '" + r.name + "' has lo > hi");
    if (r.scale == SampleScale::Log && !(r.lo > 0)) {
      throw Error(ErrorKind::InvalidArgument, "log range '" + r.name + "' needs lo > 0");
    }
    OptimizerSpec probe = cfg.base;
    probe.set(r.name, r.lo);
  }

  SearchResult out;
  out.trials.resize(static_cast<std::size_t>(cfg.trials));
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(t));
    Rng rng(seed);
    OptimizerSpec spec = cfg.base;
    TrialRecord& rec = out.trials[static_cast<std::size_t>(t)];
    rec.index = t;
    for (const auto& r : cfg.ranges) {
      const double v = sample(r, rng);
      rec.values.push_back(v);
      spec.set(r.name, v);
    }
    spec.set_max_iters(cfg.steps_per_trial);
    const RunSummary run = guarded_run(spec, objective, cfg.theta0, seed, {});
    rec.stop_reason = run.stop_reason;
    rec.score = run.stop_reason == StopReason::Diverged ? std::numeric_limits<double>::quiet_NaN()
                                                         : run.best_f;
    if (std::isfinite(rec.score) && (out.best_trial < 0 || rec.score < out.best_score)) {
      out.best_trial = t;
      out.best_score = rec.score;
      out.best = spec;
    }
  }
  if (out.best_trial < 0) throw Error(ErrorKind::SearchFailed, "every trial diverged");
  out.best.set_max_iters(cfg.base.max_iters());
  return out;
}

SearchResult random_search(const SearchConfig& cfg) {
  const auto objective = make_objective(cfg.objective);
  return random_search(cfg, *objective);
}

// ------------------------------------------------------------ config I/O

namespace {
json init_to_json(const InitStrategy& init) {
  if (const auto* fixed = std::get_if<FixedPoint>(&init)) {
    return json{{"kind", "fixed"}, {"theta0", to_json(fixed->theta0)}};
  }
  const auto& box = std::get<UniformBox>(init);
  return json{{"kind", "box"}, {"lo", to_json(box.lo)}, {"hi", to_json(box.hi)}};
}
}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json j{{"objective", cfg.objective.name},
         {"dim", cfg.objective.dim},
         {"m", cfg.objective.m},
         {"optimizer", cfg.optimizer.name},
         {"bbi", to_json(cfg.optimizer.bbi)},
         {"gdm",
          {{"eta", cfg.optimizer.gdm.eta},
           {"mu", cfg.optimizer.gdm.mu},
           {"dV", cfg.optimizer.gdm.dV},
           {"eps2", cfg.optimizer.gdm.eps2},
           {"max_iters", cfg.optimizer.gdm.max_iters}}},
         {"n_runs", cfg.n_runs},
         {"base_seed", cfg.base_seed},
         {"init", init_to_json(cfg.init)},
         {"trace_every", cfg.trace_every}};
  if (cfg.objective.epsilon) j["epsilon"] = *cfg.objective.epsilon;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "experiment config must be an object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "objective") cfg.objective.name = val.get<std::string>();
      else if (key == "dim") cfg.objective.dim = val.get<Index>();
      else if (key == "m") cfg.objective.m = val.get<double>();
      else if (key == "epsilon") cfg.objective.epsilon = val.get<double>();
      else if (key == "optimizer") cfg.optimizer.name = val.get<std::string>();
      else if (key == "bbi") update_from_json(cfg.optimizer.bbi, val);
      else if (key == "gdm") {
        for (const auto& [k, v] : val.items()) {
          if (k == "eta") cfg.optimizer.gdm.eta = v.get<double>();
          else if (k == "mu") cfg.optimizer.gdm.mu = v.get<double>();
          else if (k == "dV") cfg.optimizer.gdm.dV = v.get<double>();
          else if (k == "eps2") cfg.optimizer.gdm.eps2 = v.get<double>();
          else if (k == "max_iters") cfg.optimizer.gdm.max_iters = v.get<long long>();
          else throw Error(ErrorKind::ParseError, "unknown gdm key '" + k + "'");
        }
      } else if (key == "n_runs") cfg.n_runs = val.get<int>();
      else if (key == "base_seed") cfg.base_seed = val.get<std::uint64_t>();
      else if (key == "trace_every") cfg.trace_every = val.get<long long>();
      else if (key == "threads") cfg.threads = val.get<unsigned>();
      else if (key == "init") {
        const auto kind = val.at("kind").get<std::string>();
        if (kind == "fixed") cfg.init = FixedPoint{vector_from_json(val.at("theta0"))};
        else if (kind == "box") cfg.init = UniformBox{vector_from_json(val.at("lo")), vector_from_json(val.at("hi"))};
        else throw Error(ErrorKind::ParseError, "unknown init kind '" + kind + "'");
      } else {
        throw Error(ErrorKind::ParseError, "unknown experiment key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed experiment config: ") + e.what());
  }
  if (const auto* fixed = std::get_if<FixedPoint>(&cfg.init); fixed && fixed->theta0.size() == 0) {
    cfg.init = FixedPoint{Vector::Zero(cfg.objective.dim)};
  }
  return cfg;
}

}  // namespace ecd
