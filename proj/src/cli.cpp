#include "ecd/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ecd/analysis.hpp"
#include "ecd/harness.hpp"
#include "ecd/io.hpp"

namespace ecd::cli {

namespace {

namespace fs = std::filesystem;

struct Settings {
  ObjectiveConfig objective;
  OptimizerSpec opt;
  std::string opt_b = "gdm";
  std::optional<Vector> theta0;
  std::uint64_t seed = 0;
  long long trace_every = 1;
  std::string out;
  int n_runs = 1000;
  unsigned threads = 0;
  int trials = 100;
  long long steps_per_trial = 200;
  int tune_trials = 0;
  std::vector<std::string> ranges;
  double energy = 1.0;
  double v_floor = 1e-3;
  std::vector<Vector> centers;
};

enum class Kind { Number, Integer, Unsigned, Bool, String, Vec, VecList, StringList };

struct Key {
  const char* name;
  const char* flag;
  Kind kind;
  const char* help;
};

// Config-file keys and their command-line spellings.
const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"objective", "--objective", Kind::String, "ackley | zakharov | two_basin | quadratic"},
      {"dim", "--dim", Kind::Integer, "objective dimension"},
      {"m", "--m", Kind::Number, "quadratic curvature scale"},
      {"epsilon", "--epsilon", Kind::Number, "two_basin well offset (calibrated if absent)"},
      {"opt", "--opt", Kind::String, "bbi | mecd | gdm"},
      {"opt_b", "--opt-b", Kind::String, "second optimizer for compare"},
      {"dt", "--dt", Kind::Number, "step size"},
      {"dV", "--dV", Kind::Number, "loss shift / accuracy target"},
      {"dE", "--dE", Kind::Number, "extra initial energy"},
      {"T0", "--T0", Kind::Integer, "fixed-bounce interval"},
      {"T1", "--T1", Kind::Integer, "no-progress bounce threshold"},
      {"Nb", "--Nb", Kind::Integer, "number of fixed bounces"},
      {"eps1", "--eps1", Kind::Number, "rescaling tolerance"},
      {"eps2", "--eps2", Kind::Number, "stopping threshold"},
      {"max_iters", "--max-iters", Kind::Integer, "iteration cap"},
      {"adapt_dV", "--adapt-dV", Kind::Bool, "lower dV when V < 0 is observed"},
      {"eta", "--eta", Kind::Number, "GDM learning rate"},
      {"mu", "--mu", Kind::Number, "GDM momentum"},
      {"seed", "--seed", Kind::Unsigned, "base seed"},
      {"trace_every", "--trace-every", Kind::Integer, "trace subsampling (0 = off)"},
      {"theta0", "--theta0", Kind::Vec, "initial point, comma separated"},
      {"n_runs", "--n-runs", Kind::Integer, "number of runs"},
      {"threads", "--threads", Kind::Integer, "worker threads (0 = all cores)"},
      {"trials", "--trials", Kind::Integer, "random-search trials"},
      {"steps_per_trial", "--steps-per-trial", Kind::Integer, "steps per search trial"},
      {"tune_trials", "--tune-trials", Kind::Integer, "compare: search trials per optimizer"},
      {"ranges", "--range", Kind::StringList, "search range name:lo:hi[:log]"},
      {"energy", "--energy", Kind::Number, "energy for volume prediction"},
      {"v_floor", "--v-floor", Kind::Number, "well height offset for volume prediction"},
      {"centers", "--center", Kind::VecList, "basin start point, comma separated (repeatable)"},
      {"out", "--out", Kind::String, "output directory"},
  };
  return k;
}

[[noreturn]] void usage_error(const std::string& msg) { throw Error(ErrorKind::ParseError, msg); }

Vector parse_vec(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error("cannot parse '" + s + "' as a list of numbers");
    }
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

json string_to_json(Kind kind, const std::string& s) {
  try {
    std::size_t pos = 0;
    switch (kind) {
      case Kind::Number: {
        const double v = std::stod(s, &pos);
        if (pos != s.size()) break;
        return v;
      }
      case Kind::Integer: {
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) break;
        return v;
      }
      case Kind::Unsigned: {
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) break;
        return v;
      }
      case Kind::Bool: return s == "true" || s == "1";
      case Kind::String: return s;
      case Kind::Vec: return to_json(parse_vec(s));
      case Kind::VecList:
      case Kind::StringList: break;
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
  }
  usage_error("invalid value '" + s + "'");
}

void apply(Settings& st, const std::string& key, const json& v) {
  try {
    if (key == "objective") st.objective.name = v.get<std::string>();
    else if (key == "dim") st.objective.dim = v.get<Index>();
    else if (key == "m") st.objective.m = v.get<double>();
    else if (key == "epsilon") st.objective.epsilon = v.get<double>();
    else if (key == "opt") st.opt.name = v.get<std::string>();
    else if (key == "opt_b") st.opt_b = v.get<std::string>();
    else if (key == "adapt_dV") st.opt.bbi.adapt_dV = v.get<bool>();
    else if (key == "seed") st.seed = v.get<std::uint64_t>();
    else if (key == "trace_every") st.trace_every = v.get<long long>();
    else if (key == "theta0") st.theta0 = vector_from_json(v);
    else if (key == "n_runs") st.n_runs = v.get<int>();
    else if (key == "threads") st.threads = v.get<unsigned>();
    else if (key == "trials") st.trials = v.get<int>();
    else if (key == "steps_per_trial") st.steps_per_trial = v.get<long long>();
    else if (key == "tune_trials") st.tune_trials = v.get<int>();
    else if (key == "ranges") st.ranges = v.get<std::vector<std::string>>();
    else if (key == "energy") st.energy = v.get<double>();
    else if (key == "v_floor") st.v_floor = v.get<double>();
    else if (key == "out") st.out = v.get<std::string>();
    else if (key == "centers") {
      st.centers.clear();
      for (const auto& c : v) st.centers.push_back(vector_from_json(c));
    } else {
      // Remaining keys are numeric optimizer hyperparameters.
      st.opt.set(key, v.get<double>());
    }
  } catch (const json::exception& e) {
    usage_error("bad value for '" + key + "': " + e.what());
  }
}

void apply_config_file(Settings& st, const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    usage_error("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) usage_error("config must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    bool known = false;
    for (const auto& k : keys()) known = known || key == k.name;
    if (!known) usage_error("unknown config key '" + key + "'");
    apply(st, key, val);
  }
}

Settings defaults_for(const std::string& cmd) {
  Settings st;
  if (cmd == "basins") {
    const auto cfg = default_basin_config();
    st.objective = cfg.objective;
    st.opt = cfg.optimizer;
    st.seed = cfg.base_seed;
    st.theta0 = std::get<FixedPoint>(cfg.init).theta0;
    st.n_runs = cfg.n_runs;
    st.trace_every = 0;
  } else if (cmd == "volume") {
    st.objective.name = "two_basin";
  } else if (cmd == "sweep") {
    st.trace_every = 0;
  }
  return st;
}

Vector default_start(const ObjectiveConfig& obj) {
  if (obj.name == "zakharov") return Vector::Constant(obj.dim, -1.0);
  if (obj.name == "ackley") return (Vector(2) << 2.3, -3.1).finished();
  if (obj.name == "quadratic") return Vector::Ones(obj.dim);
  return Vector::Zero(obj.dim);
}

ParamRange parse_range(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) usage_error("range must be name:lo:hi[:log|lin]");
  ParamRange r;
  r.name = parts[0];
  r.lo = string_to_json(Kind::Number, parts[1]).get<double>();
  r.hi = string_to_json(Kind::Number, parts[2]).get<double>();
  if (parts.size() == 4) {
    if (parts[3] == "log") r.scale = SampleScale::Log;
    else if (parts[3] != "lin") usage_error("range scale must be log or lin");
  }
  return r;
}

fs::path output_dir(const Settings& st) {
  std::string dir = st.out;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env && *env ? env : "ecd_out";
  }
  fs::create_directories(dir);
  return dir;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json spec_json(const OptimizerSpec& spec) {
  json j{{"name", spec.name}};
  if (spec.name == "gdm") {
    j["eta"] = spec.gdm.eta;
    j["mu"] = spec.gdm.mu;
    j["dV"] = spec.gdm.dV;
    j["max_iters"] = spec.gdm.max_iters;
  } else {
    j["hyperparams"] = to_json(spec.bbi);
  }
  return j;
}

OptimizerSpec named(const OptimizerSpec& base, const std::string& name) {
  OptimizerSpec s = base;
  s.name = name;
  return s;
}

// ------------------------------------------------------------ subcommands

int cmd_run(const Settings& st, std::ostream& out) {
  const auto objective = make_objective(st.objective);
  const Vector theta0 = st.theta0.value_or(default_start(st.objective));
  RunOptions opts;
  opts.trace_every = st.trace_every;
  const RunSummary r = run_optimizer(st.opt, *objective, theta0, st.seed, opts);

  const fs::path dir = output_dir(st);
  json j = to_json(r);
  j["objective"] = objective->name();
  j["optimizer"] = spec_json(st.opt);
  j["theta0"] = to_json(theta0);
  write_text_file(dir / "summary.json", dump(j));
  std::ostringstream csv;
  write_trace_csv(csv, r.trace);
  write_text_file(dir / "trace.csv", csv.str());
  out << dump(j);
  return r.stop_reason == StopReason::Diverged ? kDiverged : kOk;
}

OptimizerSpec tuned(const Settings& st, const OptimizerSpec& spec, const Vector& theta0) {
  if (st.tune_trials <= 0) return spec;
  SearchConfig sc;
  sc.objective = st.objective;
  sc.base = spec;
  sc.theta0 = theta0;
  sc.ranges = default_search_ranges(spec.name);
  sc.trials = st.tune_trials;
  sc.steps_per_trial = st.steps_per_trial;
  sc.base_seed = st.seed;
  return random_search(sc).best;
}

int cmd_compare(const Settings& st, std::ostream& out) {
  const auto objective = make_objective(st.objective);
  const Vector theta0 = st.theta0.value_or(default_start(st.objective));
  const OptimizerSpec a = tuned(st, named(st.opt, st.opt.name), theta0);
  const OptimizerSpec b = tuned(st, named(st.opt, st.opt_b), theta0);
  RunOptions opts;
  opts.trace_every = std::max(1LL, st.trace_every);
  const RunSummary ra = run_optimizer(a, *objective, theta0, st.seed, opts);
  const RunSummary rb = run_optimizer(b, *objective, theta0, st.seed, opts);

  const bool same = a.name == b.name;
  const std::string col_a = "loss_" + a.name + (same ? "_1" : "");
  const std::string col_b = "loss_" + b.name + (same ? "_2" : "");
  std::map<long long, std::pair<std::optional<double>, std::optional<double>>> rows;
  for (const auto& rec : ra.trace) rows[rec.step].first = rec.v + ra.final_dV;
  for (const auto& rec : rb.trace) rows[rec.step].second = rec.v + rb.final_dV;
  std::ostringstream csv;
  csv << "step," << col_a << ',' << col_b << '\n';
  for (const auto& [step, vals] : rows) {
    csv << step << ',' << (vals.first ? format_double(*vals.first) : "") << ','
        << (vals.second ? format_double(*vals.second) : "") << '\n';
  }

  const fs::path dir = output_dir(st);
  write_text_file(dir / "compare.csv", csv.str());
  json j{{"objective", objective->name()},
         {"theta0", to_json(theta0)},
         {"a", {{"optimizer", spec_json(a)}, {"summary", to_json(ra)}}},
         {"b", {{"optimizer", spec_json(b)}, {"summary", to_json(rb)}}}};
  write_text_file(dir / "compare.json", dump(j));
  out << dump(j);
  const bool diverged =
      ra.stop_reason == StopReason::Diverged || rb.stop_reason == StopReason::Diverged;
  return diverged ? kDiverged : kOk;
}

int cmd_sweep(const Settings& st, std::ostream& out) {
  SearchConfig sc;
  sc.objective = st.objective;
  sc.base = st.opt;
  sc.theta0 = st.theta0.value_or(default_start(st.objective));
  if (st.ranges.empty()) {
    sc.ranges = default_search_ranges(st.opt.name);
  } else {
    for (const auto& r : st.ranges) sc.ranges.push_back(parse_range(r));
  }
  sc.trials = st.trials;
  sc.steps_per_trial = st.steps_per_trial;
  sc.base_seed = st.seed;
  const SearchResult res = random_search(sc);

  std::ostringstream csv;
  csv << "trial";
  for (const auto& r : sc.ranges) csv << ',' << r.name;
  csv << ",score,stop_reason\n";
  for (const auto& t : res.trials) {
    csv << t.index;
    for (double v : t.values) csv << ',' << format_double(v);
    csv << ',' << format_double(t.score) << ',' << to_string(t.stop_reason) << '\n';
  }
  const fs::path dir = output_dir(st);
  write_text_file(dir / "trials.csv", csv.str());
  json j{{"objective", sc.objective.name},
         {"best", spec_json(res.best)},
         {"best_trial", res.best_trial},
         {"best_score", res.best_score},
         {"trials", sc.trials},
         {"steps_per_trial", sc.steps_per_trial},
         {"seed", sc.base_seed}};
  write_text_file(dir / "sweep.json", dump(j));
  out << dump(j);
  return kOk;
}

int cmd_basins(const Settings& st, std::ostream& out) {
  ExperimentConfig cfg;
  cfg.objective = st.objective;
  cfg.optimizer = st.opt;
  cfg.n_runs = st.n_runs;
  cfg.base_seed = st.seed;
  cfg.init = FixedPoint{st.theta0.value_or(Vector::Zero(st.objective.dim))};
  cfg.trace_every = st.trace_every;
  cfg.threads = st.threads;
  const BasinExperimentResult res = basin_experiment(cfg);

  const fs::path dir = output_dir(st);
  std::ostringstream ratios;
  ratios << "run_index,ratio\n";
  for (std::size_t i = 0; i < res.tally.partial_ratios.size(); ++i) {
    ratios << i << ',' << format_double(res.tally.partial_ratios[i]) << '\n';
  }
  write_text_file(dir / "partial_ratios.csv", ratios.str());

  std::ostringstream runs;
  runs << "run_index,seed,label,stop_reason,steps,bounces,final_f\n";
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& r = res.runs[i];
    const auto& label = res.tally.labels[i];
    runs << i << ',' << r.seed << ',' << (label ? std::to_string(*label + 1) : "unresolved") << ','
         << to_string(r.stop_reason) << ',' << r.steps_taken << ',' << r.bounce_count << ','
         << format_double(r.final_f) << '\n';
  }
  write_text_file(dir / "runs.csv", runs.str());
  if (st.trace_every > 0) {
    fs::create_directories(dir / "traces");
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      std::ostringstream csv;
      write_trace_csv(csv, res.runs[i].trace);
      char name[32];
      std::snprintf(name, sizeof(name), "run_%04zu.csv", i);
      write_text_file(dir / "traces" / name, csv.str());
    }
  }

  json minima = json::array();
  for (const auto& m : res.minima) minima.push_back(to_json(m));
  const double ratio = res.tally.final_ratio();
  json j{{"n_runs", cfg.n_runs},
         {"seed", cfg.base_seed},
         {"theta0", to_json(std::get<FixedPoint>(cfg.init).theta0)},
         {"optimizer", spec_json(cfg.optimizer)},
         {"minima", minima},
         {"counts", res.tally.counts},
         {"unresolved", res.tally.unresolved},
         {"ratio", std::isfinite(ratio) ? json(ratio) : json(format_double(ratio))}};
  write_text_file(dir / "basins.json", dump(j));
  out << dump(j);
  return kOk;
}

int cmd_volume(const Settings& st, std::ostream& out) {
  const auto objective = make_objective(st.objective);
  std::vector<Vector> starts = st.centers;
  if (starts.empty()) {
    if (st.objective.name != "two_basin") usage_error("volume needs --center for this objective");
    starts = {TwoBasin::center1(), TwoBasin::center2()};
  }
  const VolumePrediction pred = predict_volumes(*objective, starts, st.energy, st.v_floor);

  json basins = json::array();
  for (std::size_t i = 0; i < pred.basins.size(); ++i) {
    const auto& b = pred.basins[i];
    const auto& v = pred.volumes[i];
    basins.push_back({{"minimum_location", to_json(b.minimum_location)},
                      {"v_min", b.v_min},
                      {"hessian_eigenvalues", to_json(b.hessian_eigenvalues)},
                      {"masses", to_json(b.masses())},
                      {"prefactor", v.prefactor},
                      {"radial_integral", v.radial},
                      {"volume", v.volume},
                      {"regime_warning", v.regime_warning}});
  }
  json j{{"objective", objective->name()},
         {"energy", st.energy},
         {"v_floor", st.v_floor},
         {"basins", basins},
         {"ratios_to_first", pred.ratios_to_first}};
  if (pred.volumes.size() >= 2) j["ratio"] = pred.ratios_to_first[1];
  if (const auto* tb = dynamic_cast<const TwoBasin*>(objective.get())) j["epsilon"] = tb->epsilon();

  const fs::path dir = output_dir(st);
  write_text_file(dir / "volume.json", dump(j));
  out << dump(j);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-conserving descent optimizers and experiments"};
  app.require_subcommand(1);

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"run", "single seeded optimizer run"},
      {"compare", "two optimizers on the same start, loss-versus-step CSV"},
      {"sweep", "random hyperparameter search"},
      {"basins", "two-well basin-ratio experiment"},
      {"volume", "refine minima and predict phase-space volume ratios"},
  };

  std::map<std::string, std::map<std::string, std::vector<std::string>>> raw;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, std::string> config_path;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    subs[name] = sub;
    sub->add_option("--config", config_path[name], "JSON config file");
    for (const auto& k : keys()) {
      if (k.kind == Kind::Bool) {
        sub->add_flag(k.flag, flags[name][k.name], k.help);
      } else {
        auto* opt = sub->add_option(k.flag, raw[name][k.name], k.help);
        if (k.kind != Kind::VecList && k.kind != Kind::StringList) opt->expected(1);
      }
    }
    sub->add_flag("-v,--verbose", "verbose output");
  }

  std::vector<const char*> argv{"ecd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::string cmd;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) cmd = name;
  }

  try {
    Settings st = defaults_for(cmd);
    if (!config_path[cmd].empty()) apply_config_file(st, config_path[cmd]);
    for (const auto& k : keys()) {
      auto* opt = subs[cmd]->get_option(k.flag);
      if (opt->count() == 0) continue;
      if (k.kind == Kind::Bool) {
        apply(st, k.name, flags[cmd][k.name]);
      } else if (k.kind == Kind::VecList) {
        json list = json::array();
        for (const auto& s : raw[cmd][k.name]) list.push_back(to_json(parse_vec(s)));
        apply(st, k.name, list);
      } else if (k.kind == Kind::StringList) {
        apply(st, k.name, raw[cmd][k.name]);
      } else {
        apply(st, k.name, string_to_json(k.kind, raw[cmd][k.name].front()));
      }
    }
    st.opt.validate();
    if (cmd == "run") return cmd_run(st, out);
    if (cmd == "compare") return cmd_compare(st, out);
    if (cmd == "sweep") return cmd_sweep(st, out);
    if (cmd == "basins") return cmd_basins(st, out);
    if (cmd == "volume") return cmd_volume(st, out);
    err << "error: unknown subcommand\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::RefinementFailed:
      case ErrorKind::CalibrationFailed:
      case ErrorKind::DomainError:
      case ErrorKind::InsufficientData:
      case ErrorKind::SearchFailed:
        return kAnalysisFailure;
      case ErrorKind::Diverged:
        return kDiverged;
      default:
        return kUsage;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace ecd::cli
