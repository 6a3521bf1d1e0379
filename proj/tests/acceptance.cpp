// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Criteria are numbered as in the project's acceptance list.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ecd/analysis.hpp"
#include "ecd/cli.hpp"
#include "ecd/harness.hpp"
#include "ecd/io.hpp"
#include "ecd/optimizers.hpp"
#include "oracles.hpp"

using namespace ecd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

BbiHyperParams without_bounces(BbiHyperParams hp = {}) {
  hp.Nb = 0;
  hp.T0 = 1LL << 60;
  hp.T1 = 1LL << 60;
  return hp;
}

const Vector kZakharovStart = Vector::Constant(10, -1.0);

// 1 ------------------------------------------------------------------------
Outcome energy_conservation() {
  const Zakharov z(10);
  BbiHyperParams hp;
  hp.dt = 1e-3;
  hp.dE = 1.0;
  hp.max_iters = 10000;
  long long checked = 0;
  double worst = 0.0;
  RunOptions opts;
  opts.on_step = [&](const EcdState& s, const StepInfo& info) {
    if (info.pi_c2 < 0.0) return;
    const double scale = s.energy * s.energy / info.v_before;
    worst = std::max(worst, std::abs(info.pi2_after_rescale - info.pi_c2) / scale);
    ++checked;
  };
  const RunSummary r = bbi_run(z, kZakharovStart, hp, 1, opts);
  const bool pass = checked == r.steps_taken && r.steps_taken == 10000 && worst <= 1e-12;
  return {pass, fmt("%lld steps checked, max |Pi^2 - (E^2/V - V)| / (E^2/V) = %.3g (tol 1e-12)",
                    checked, worst)};
}

// 2 ------------------------------------------------------------------------
double bi_energy(const EcdState& s) { return std::sqrt(s.v_current * (s.v_current + s.pi.squaredNorm())); }

Outcome symplectic_order() {
  const ShallowQuadratic q(1.0);
  auto drift = [&](double dt) {
    BbiHyperParams hp = without_bounces();
    hp.dE = 0.5;
    hp.dt = dt;
    hp.eps1 = 1e300;  // never rescale
    EcdState s = bbi_init(q, Vector::Ones(1), hp, 0);
    const double e0 = bi_energy(s);
    bbi_step(s, q, hp);
    return std::abs(bi_energy(s) - e0);
  };
  const double ratio = drift(1e-3) / drift(5e-4);
  return {ratio >= 3.0 && ratio <= 5.0, fmt("drift(dt)/drift(dt/2) = %.4f (want [3, 5])", ratio)};
}

// 3 ------------------------------------------------------------------------
Outcome stall_freedom() {
  const Ackley a;
  BbiHyperParams hp;  // T0 = 20, Nb = 4, T1 = 100
  hp.dE = 0.0;
  hp.max_iters = 100000;
  const Vector start = (Vector(2) << 2.1, -0.9).finished();
  long long stalls = 0;
  long long steps = 0;
  RunOptions opts;
  opts.on_step = [&](const EcdState&, const StepInfo& info) {
    ++steps;
    if (info.v_before > hp.eps2 && !(info.displacement > 0.0)) ++stalls;
  };
  const RunSummary r = bbi_run(a, start, hp, 2, opts);
  const bool pass = steps == 100000 && stalls == 0 && r.stop_reason == StopReason::MaxIters;
  return {pass, fmt("%lld steps, %lld with zero displacement, final V = %.4g (trapped, %s)", steps, stalls,
                    r.final_v, std::string(to_string(r.stop_reason)).c_str())};
}

// 4 ------------------------------------------------------------------------
double bbi_decay(double m) {
  const ShallowQuadratic q(m);
  BbiHyperParams hp = without_bounces();
  hp.dE = 1e-3;
  hp.dt = 1e-2;
  hp.max_iters = 200000;
  RunOptions opts;
  opts.trace_every = 10;
  const Vector x0 = Vector::Ones(1);
  const RunSummary r = bbi_run(q, x0, hp, 0, opts);
  return fit_decay_rate(r.trace, hp.dt, asymptotic_window(q.value(x0) + hp.dE, hp.eps2));
}

double gdm_decay(double m) {
  const ShallowQuadratic q(m);
  GdmHyperParams hp;
  hp.eta = 1e-2;
  hp.mu = 0.5;  // overdamped for both masses
  hp.max_iters = 20000;
  RunOptions opts;
  opts.trace_every = 10;
  const RunSummary r = gdm_run(q, Vector::Ones(1), hp, opts);
  return fit_decay_rate(r.trace, hp.eta, [](const TraceRecord& t) { return t.step >= 500 && t.v > 1e-200; });
}

Outcome shallow_valley_rates() {
  const double b1 = bbi_decay(1.0);
  const double bh = bbi_decay(0.5);
  const double g1 = gdm_decay(1.0);
  const double gh = gdm_decay(0.5);
  const double target = 1.0 / std::sqrt(2.0);
  const bool rate_ok = std::abs(b1 / target - 1.0) <= 0.15;
  const bool bbi_scaling = std::abs((b1 / bh) / 2.0 - 1.0) <= 0.15;
  const bool gdm_scaling = std::abs((g1 / gh) / 4.0 - 1.0) <= 0.20;
  return {rate_ok && bbi_scaling && gdm_scaling,
          fmt("BBI k(m=1) = %.4f (1/sqrt2 = %.4f); BBI k(1)/k(0.5) = %.3f (want 2 +-15%%); "
              "GDM k(1)/k(0.5) = %.3f (want 4 +-20%%)",
              b1, target, b1 / bh, g1 / gh)};
}

// 5 ------------------------------------------------------------------------
Outcome ackley_success() {
  OptimizerSpec bbi;
  bbi.name = "bbi";
  bbi.bbi.dE = 2.0;
  bbi.bbi.dV = 1e-4;
  bbi.bbi.max_iters = 30000;  // T0 = 20, Nb = 4, T1 = 100 are the defaults

  SearchConfig sc;
  sc.objective = {"ackley", 2, 1.0, {}};
  sc.base = bbi;
  sc.theta0 = (Vector(2) << 2.3, -3.1).finished();
  sc.ranges = default_search_ranges("bbi");
  sc.trials = 100;
  sc.steps_per_trial = 200;
  sc.base_seed = 2022;
  const SearchResult tuned = random_search(sc);

  ExperimentConfig cfg;
  cfg.objective = sc.objective;
  cfg.optimizer = tuned.best;
  cfg.n_runs = 30;
  cfg.base_seed = 2022;
  cfg.init = UniformBox{Vector::Constant(2, -4.0), Vector::Constant(2, 4.0)};
  const RestartResult r = restart_experiment(cfg, 5, 5e-4);
  const int ok = r.successes();
  return {ok >= 24, fmt("%d/30 starts reached V < 5e-4 within 3e4 iterations (5 restarts each, tuned dt = %.3g; need 24)",
                        ok, tuned.best.bbi.dt)};
}

// 6 ------------------------------------------------------------------------
Outcome zakharov_comparison() {
  SearchConfig sc;
  sc.objective = {"zakharov", 10, 1.0, {}};
  sc.theta0 = kZakharovStart;
  sc.trials = 100;
  sc.steps_per_trial = 2500;
  sc.base_seed = 2022;

  sc.base.name = "bbi";
  sc.base.bbi = without_bounces();
  sc.base.bbi.dE = 0.0;
  sc.base.bbi.dV = 1e-22;
  sc.base.set_max_iters(10000);
  sc.ranges = default_search_ranges("bbi");
  const SearchResult bbi = random_search(sc);

  sc.base.name = "gdm";
  sc.base.gdm.dV = 1e-22;
  sc.ranges = default_search_ranges("gdm");
  const SearchResult gdm_wide = random_search(sc);
  sc.ranges[0].hi = 1e-5;
  const SearchResult gdm_narrow = random_search(sc);
  const SearchResult& gdm = gdm_narrow.best_score < gdm_wide.best_score ? gdm_narrow : gdm_wide;

  const Zakharov z(10);
  const RunSummary rb = run_optimizer(bbi.best, z, kZakharovStart, 0);
  const RunSummary rg = run_optimizer(gdm.best, z, kZakharovStart, 0);
  const bool pass = rb.final_f < rg.final_f && rb.final_f <= 1e-20;
  return {pass, fmt("BBI (dt = %.3g) final F = %.3g after %lld steps; GDM (eta = %.3g, mu = %.3f) final F = %.3g",
                    bbi.best.bbi.dt, rb.final_f, rb.steps_taken, gdm.best.gdm.eta, gdm.best.gdm.mu, rg.final_f)};
}

// 7 ------------------------------------------------------------------------
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ecd_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int invoke(std::vector<std::string> args, const fs::path& out_dir, std::string* out = nullptr) {
  args.push_back("--out");
  args.push_back(out_dir.string());
  std::ostringstream o, e;
  const int code = cli::run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "%s", e.str().c_str());
  return code;
}

Outcome basin_ratio() {
  std::string volume_json;
  if (invoke({"volume"}, scratch("volume"), &volume_json) != 0) return {false, "volume subcommand failed"};
  const double predicted = json::parse(volume_json).at("ratio").get<double>();

  ExperimentConfig cfg = default_basin_config();  // Nb 1, dt 1e-2, T0 20, T1 750, dE 0, dV 1e-3
  cfg.n_runs = 1000;
  const BasinExperimentResult res = basin_experiment(cfg);
  const double empirical = res.tally.final_ratio();
  const double rel = std::abs(empirical / predicted - 1.0);
  const bool pass = predicted >= 1.88 && predicted <= 1.98 && rel <= 0.15;
  return {pass, fmt("predicted %.4f, empirical %.4f (%lld : %lld, %lld unresolved), deviation %.1f%% (tol 15%%)",
                    predicted, empirical, res.tally.counts[0], res.tally.counts[1], res.tally.unresolved,
                    100.0 * rel)};
}

// 8 ------------------------------------------------------------------------
Outcome volume_oracles() {
  double worst_hyp = 0.0;
  for (int n : {2, 3, 4}) {
    for (double v : {1e-2, 1e-4}) {
      const double hyp = oracle::hypergeometric_radial(v, n);
      worst_hyp = std::max(worst_hyp, std::abs(basin_radial_volume(v, n) - hyp) / hyp);
    }
  }
  double worst_closed = 0.0;
  for (double v : {1e-2, 1e-4}) {
    const double exact = oracle::radial_closed_form_n2(v);
    worst_closed = std::max(worst_closed, std::abs(basin_radial_volume(v, 2) - exact) / exact);
  }
  return {worst_hyp <= 1e-6 && worst_closed <= 1e-9,
          fmt("quadrature vs hypergeometric max rel err %.3g (tol 1e-6); n = 2 vs log(1 + 1/(2V)) %.3g (tol 1e-9)",
              worst_hyp, worst_closed)};
}

// 9 ------------------------------------------------------------------------
Outcome derivative_oracles() {
  double worst_g = 0.0;
  double worst_h = 0.0;
  int points = 0;
  for (const auto& c : oracle::benchmark_cases()) {
    Rng rng(derive_seed(2022, static_cast<std::uint64_t>(c.objective->dim())));
    for (int k = 0; k < 100; ++k, ++points) {
      const Vector x = oracle::sample_point(rng, c.objective->dim(), c.box);
      worst_g = std::max(worst_g, oracle::rel_err(c.objective->gradient(x), oracle::fd_gradient(*c.objective, x)));
      if (auto h = c.objective->hessian(x)) {
        worst_h = std::max(worst_h, oracle::rel_err(*h, oracle::fd_hessian(*c.objective, x)));
      }
    }
  }
  return {worst_g <= 1e-6 && worst_h <= 1e-5,
          fmt("%d points over %zu objectives: gradient max rel err %.3g (tol 1e-6), Hessian %.3g (tol 1e-5)", points,
              oracle::benchmark_cases().size(), worst_g, worst_h)};
}

// 10 -----------------------------------------------------------------------
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), dir).string(), read_text_file(e.path().string()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

Outcome determinism() {
  const std::vector<std::vector<std::string>> experiments = {
      {"run", "--objective", "ackley", "--dE", "2", "--dV", "1e-4", "--max-iters", "30000", "--trace-every", "10",
       "--seed", "7"},
      {"compare", "--objective", "zakharov", "--dim", "10", "--theta0", "-1,-1,-1,-1,-1,-1,-1,-1,-1,-1", "--dV",
       "1e-22", "--T0", "1000000000", "--T1", "1000000000", "--max-iters", "10000", "--tune-trials", "100",
       "--steps-per-trial", "2500", "--trace-every", "100"},
      {"sweep", "--objective", "ackley", "--dE", "2", "--dV", "1e-4", "--trials", "100", "--steps-per-trial", "200"},
      {"basins", "--n-runs", "1000", "--trace-every", "100"},
      {"volume"},
  };
  int identical = 0;
  std::string failed;
  for (std::size_t k = 0; k < experiments.size(); ++k) {
    const fs::path a = scratch("det_a" + std::to_string(k));
    const fs::path b = scratch("det_b" + std::to_string(k));
    const bool ran = invoke(experiments[k], a) == 0 && invoke(experiments[k], b) == 0;
    const auto sa = snapshot(a);
    if (ran && !sa.empty() && sa == snapshot(b)) {
      ++identical;
    } else {
      failed += " " + experiments[k][0];
    }
  }

  // In-process experiments: restart protocol with threads.
  ExperimentConfig cfg;
  cfg.objective = {"ackley", 2, 1.0, {}};
  cfg.optimizer.bbi.dE = 2.0;
  cfg.optimizer.bbi.dV = 1e-4;
  cfg.optimizer.bbi.max_iters = 3000;
  cfg.n_runs = 8;
  cfg.base_seed = 99;
  cfg.init = UniformBox{Vector::Constant(2, -4.0), Vector::Constant(2, 4.0)};
  cfg.threads = 1;
  const RestartResult r1 = restart_experiment(cfg, 3, 5e-4);
  cfg.threads = 4;
  const RestartResult r2 = restart_experiment(cfg, 3, 5e-4);
  const bool restarts_same = r1.runs == r2.runs && r1.success == r2.success;
  if (!restarts_same) failed += " restarts";

  const bool pass = identical == static_cast<int>(experiments.size()) && restarts_same;
  return {pass, fmt("%d/%zu CLI experiments byte-identical on rerun, restart protocol %s across thread counts%s%s",
                    identical, experiments.size(), restarts_same ? "identical" : "DIFFERS",
                    failed.empty() ? "" : "; mismatched:", failed.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Energy conservation after rescaling", energy_conservation},
      {"Symplectic order of the BBI step", symplectic_order},
      {"Stall-freedom on Ackley", stall_freedom},
      {"Shallow-valley decay rates", shallow_valley_rates},
      {"Ackley success rate", ackley_success},
      {"Zakharov comparison", zakharov_comparison},
      {"Two-basin ratio", basin_ratio},
      {"Volume oracle equivalence", volume_oracles},
      {"Gradient/Hessian oracles", derivative_oracles},
      {"Determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2zu. %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  fs::remove_all(fs::temp_directory_path() / ("ecd_accept_" + std::to_string(::getpid())));
  return failures == 0 ? 0 : 1;
}
