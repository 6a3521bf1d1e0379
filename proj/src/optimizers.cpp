#include "ecd/optimizers.hpp"

#include <cmath>
#include <limits>

namespace ecd {

void GdmHyperParams::validate() const {
  if (!(eta > 0) || !std::isfinite(eta)) throw Error(ErrorKind::InvalidArgument, "eta must be positive");
  if (!(mu >= 0 && mu < 1)) throw Error(ErrorKind::InvalidArgument, "mu must lie in [0, 1)");
  if (!(dV >= 0) || !std::isfinite(dV)) throw Error(ErrorKind::InvalidArgument, "dV must be non-negative");
  if (!(eps2 > 0)) throw Error(ErrorKind::InvalidArgument, "eps2 must be positive");
  if (max_iters < 0) throw Error(ErrorKind::InvalidArgument, "max_iters must be non-negative");
}

namespace {

/// Common part of BBI and massive-ECD initialization; momentum is left zero.
EcdState init_common(const Objective& objective, const Vector& theta0, const BbiHyperParams& hp,
                     std::uint64_t seed, Vector& grad0) {
  hp.validate();
  if (theta0.size() != objective.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "initial point does not match objective dimension");
  }
  if (!theta0.allFinite()) throw Error(ErrorKind::NonFiniteValue, "initial point is not finite");

  const double f0 = objective.value(theta0);
  if (!std::isfinite(f0)) throw Error(ErrorKind::Diverged, "objective is not finite at theta0");
  const double v0 = f0 - hp.dV;
  if (!(v0 > 0.0)) {
    throw Error(ErrorKind::NonPositiveInitialLoss, "V0 = F(theta0) - dV must be positive");
  }
  grad0 = objective.gradient(theta0);
  if (!grad0.allFinite()) throw Error(ErrorKind::Diverged, "gradient is not finite at theta0");

  EcdState s;
  s.theta = theta0;
  s.pi = Vector::Zero(theta0.size());
  s.energy = v0 + hp.dE;
  s.v_current = v0;
  s.f_best = f0;
  s.dV = hp.dV;
  s.v_best = v0;
  s.rng = Rng(seed);
  return s;
}

/// Unit vector along -grad, or a random direction when the gradient vanishes.
Vector descent_direction(const Vector& grad, Rng& rng) {
  const double gn = grad.norm();
  if (gn > 0.0) return -grad / gn;
  Vector r = random_normal(rng, grad.size());
  return r / r.norm();
}

/// Lower the shift after V < 0 so that V is positive again and re-anchor E.
void adapt_shift(EcdState& s, double f_current, const BbiHyperParams& hp) {
  s.dV = s.f_best - 0.1 * std::abs(s.f_best);
  s.v_current = f_current - s.dV;
  s.v_best = s.f_best - s.dV;
  s.energy = s.v_current + hp.dE;
}

/// Stores F(theta_t) into the state, resetting c1 on a new minimum.
void update_loss(EcdState& s, double f, const BbiHyperParams& hp, StepInfo& info) {
  s.v_current = f - s.dV;
  if (f < s.f_best) {
    s.f_best = f;
    s.c1 = 0;
  }
  s.v_best = s.f_best - s.dV;
  if (s.v_current < 0.0) {
    if (hp.adapt_dV) {
      adapt_shift(s, f, hp);
      info.adapted_dV = true;
    } else {
      info.stop = StopReason::NegativeLoss;
    }
  }
}

/// Shared tail of both ECD steps: counters, new loss, divergence checks.
void finish_step(EcdState& s, const Objective& objective, const BbiHyperParams& hp,
                 StepInfo& info) {
  ++s.c0;
  ++s.c1;
  ++s.step;
  if (!s.theta.allFinite() || !s.pi.allFinite()) {
    s.v_current = std::numeric_limits<double>::quiet_NaN();
    info.stop = StopReason::Diverged;
    return;
  }
  const double f = objective.value(s.theta);
  if (!std::isfinite(f)) {
    s.v_current = f - s.dV;
    info.stop = StopReason::Diverged;
    return;
  }
  update_loss(s, f, hp, info);
}

template <class StepFn, class EnergyFn>
RunSummary ecd_loop(EcdState state, const Objective& objective, const BbiHyperParams& hp,
                    std::uint64_t seed, const RunOptions& opts, StepFn step_fn,
                    EnergyFn energy_error) {
  RunSummary out;
  out.seed = seed;
  const bool tracing = opts.trace_every > 0;
  bool bounce_since_record = false;

  auto record = [&](double displacement) {
    TraceRecord r;
    r.step = state.step;
    r.v = state.v_current;
    r.pi_norm = state.pi.norm();
    r.speed = displacement / hp.dt;
    r.energy_err = energy_error(state);
    r.bounce = bounce_since_record;
    r.theta_norm = state.theta.norm();
    out.trace.push_back(r);
    bounce_since_record = false;
  };
  if (tracing) record(0.0);

  std::optional<StopReason> stop;
  while (!stop) {
    if (state.v_current <= hp.eps2) {
      stop = state.v_current < 0.0 ? StopReason::NegativeLoss : StopReason::Converged;
      break;
    }
    if (state.step >= hp.max_iters) {
      stop = StopReason::MaxIters;
      break;
    }
    if (bounce_due(state, hp)) {
      bbi_bounce(state, hp);
      bounce_since_record = true;
      continue;
    }
    StepInfo info = step_fn(state);
    if (!info.stop && opts.on_epoch && opts.epoch_every > 0 && state.step % opts.epoch_every == 0) {
      opts.on_epoch(state);
      const double f = objective.value(state.theta);
      if (!std::isfinite(f)) {
        info.stop = StopReason::Diverged;
      } else {
        const long long c1 = state.c1;
        update_loss(state, f, hp, info);
        state.c1 = c1;
      }
    }
    if (opts.on_step) opts.on_step(state, info);
    if (tracing && (state.step % opts.trace_every == 0 || info.stop)) record(info.displacement);
    if (info.stop == StopReason::Diverged) stop = info.stop;
  }

  out.final_theta = state.theta;
  out.final_v = state.v_current;
  out.final_f = state.v_current + state.dV;
  out.best_f = state.f_best;
  out.final_dV = state.dV;
  out.stop_reason = *stop;
  out.steps_taken = state.step;
  out.bounce_count = state.bounces;
  return out;
}

double bi_energy_error(const EcdState& s) {
  const double v = s.v_current;
  if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(v * (v + s.pi.squaredNorm())) - s.energy;
}

double massive_energy_error(const EcdState& s) {
  return 0.5 * s.v_current * s.pi.squaredNorm() - s.energy;
}

}  // namespace

// ------------------------------------------------------------------ BBI

EcdState bbi_init(const Objective& objective, const Vector& theta0, const BbiHyperParams& hp,
                  std::uint64_t seed) {
  Vector g;
  EcdState s = init_common(objective, theta0, hp, seed, g);
  if (hp.dE > 0.0) {
    const double v0 = s.v_current;
    const double norm = std::sqrt(s.energy * s.energy / v0 - v0);
    s.pi = norm * descent_direction(g, s.rng);
  }
  return s;
}

StepInfo bbi_step(EcdState& s, const Objective& objective, const BbiHyperParams& hp) {
  StepInfo info;
  const double v = s.v_current;
  const double e = s.energy;
  info.v_before = v;

  const Vector g = objective.gradient(s.theta);
  if (!g.allFinite()) {
    info.stop = StopReason::Diverged;
    return info;
  }

  const double pi_c2 = v * (e * e / (v * v) - 1.0);
  const double pi2 = s.pi.squaredNorm();
  info.pi_c2 = pi_c2;
  if (!(std::abs(pi2 - pi_c2) < hp.eps1 || pi_c2 < 0.0) && pi2 > 0.0) {
    s.pi *= std::sqrt(pi_c2 / pi2);
    info.rescaled = true;
  }
  info.pi2_after_rescale = s.pi.squaredNorm();
  info.rescaled_drift_speed = std::sqrt(info.pi2_after_rescale) * v / e;

  s.pi -= (0.5 * hp.dt * (v / e + e / v)) * g;
  const Vector delta = (hp.dt * v / e) * s.pi;
  s.theta += delta;
  info.displacement = delta.norm();

  finish_step(s, objective, hp, info);
  return info;
}

bool bounce_due(const EcdState& s, const BbiHyperParams& hp) {
  return s.c0 == hp.T0 || s.c1 == hp.T1;
}

void bbi_bounce(EcdState& s, const BbiHyperParams& hp) {
  const double pi2 = s.pi.squaredNorm();
  const Vector fresh = random_normal(s.rng, s.pi.size());
  const double fresh2 = fresh.squaredNorm();
  if (fresh2 > 0.0) s.pi = fresh * std::sqrt(pi2 / fresh2);

  if (s.c0 == hp.T0) {
    ++s.n_b;
    if (s.n_b < hp.Nb) {
      s.c0 = 0;
    } else {
      ++s.c0;
    }
  }
  s.c1 = 0;
  ++s.bounces;
}

RunSummary bbi_run(const Objective& objective, const Vector& theta0, const BbiHyperParams& hp,
                   std::uint64_t seed, const RunOptions& opts) {
  return ecd_loop(
      bbi_init(objective, theta0, hp, seed), objective, hp, seed, opts,
      [&](EcdState& s) { return bbi_step(s, objective, hp); }, bi_energy_error);
}

// ------------------------------------------------------------ massive ECD

EcdState massive_ecd_init(const Objective& objective, const Vector& theta0,
                          const BbiHyperParams& hp, std::uint64_t seed) {
  Vector g;
  EcdState s = init_common(objective, theta0, hp, seed, g);
  s.pi = std::sqrt(2.0 * s.energy / s.v_current) * descent_direction(g, s.rng);
  return s;
}

StepInfo massive_ecd_step(EcdState& s, const Objective& objective, const BbiHyperParams& hp) {
  StepInfo info;
  const double v = s.v_current;
  const double e = s.energy;
  info.v_before = v;

  const Vector g = objective.gradient(s.theta);
  if (!g.allFinite()) {
    info.stop = StopReason::Diverged;
    return info;
  }

  const double pi_c2 = 2.0 * e / v;
  const double pi2 = s.pi.squaredNorm();
  info.pi_c2 = pi_c2;
  if (!(std::abs(pi2 - pi_c2) < hp.eps1 || pi_c2 < 0.0) && pi2 > 0.0) {
    s.pi *= std::sqrt(pi_c2 / pi2);
    info.rescaled = true;
  }
  info.pi2_after_rescale = s.pi.squaredNorm();
  info.rescaled_drift_speed = std::sqrt(info.pi2_after_rescale) * v;

  s.pi -= (hp.dt * e / v) * g;
  const Vector delta = (hp.dt * v) * s.pi;
  s.theta += delta;
  info.displacement = delta.norm();

  finish_step(s, objective, hp, info);
  return info;
}

RunSummary massive_ecd_run(const Objective& objective, const Vector& theta0,
                           const BbiHyperParams& hp, std::uint64_t seed,
                           const RunOptions& opts) {
  return ecd_loop(
      massive_ecd_init(objective, theta0, hp, seed), objective, hp, seed, opts,
      [&](EcdState& s) { return massive_ecd_step(s, objective, hp); }, massive_energy_error);
}

// --------------------------------------------------------------------- GDM

RunSummary gdm_run(const Objective& objective, const Vector& theta0, const GdmHyperParams& hp,
                   const RunOptions& opts) {
  hp.validate();
  if (theta0.size() != objective.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "initial point does not match objective dimension");
  }

  RunSummary out;
  Vector theta = theta0;
  Vector velocity = Vector::Zero(theta.size());
  double f = objective.value(theta);
  const double e0 = f - hp.dV;
  double best = f;
  long long step = 0;
  double displacement = 0.0;

  auto record = [&] {
    TraceRecord r;
    r.step = step;
    r.v = f - hp.dV;
    r.pi_norm = velocity.norm();
    r.speed = displacement / hp.eta;
    // Mechanical energy relative to the start; friction drains it.
    r.energy_err = 0.5 * velocity.squaredNorm() + (f - hp.dV) - e0;
    r.theta_norm = theta.norm();
    out.trace.push_back(r);
  };
  const bool tracing = opts.trace_every > 0;

  std::optional<StopReason> stop;
  if (!std::isfinite(f)) stop = StopReason::Diverged;
  if (tracing) record();
  while (!stop) {
    const double v = f - hp.dV;
    if (v <= hp.eps2) {
      stop = v < 0.0 ? StopReason::NegativeLoss : StopReason::Converged;
      break;
    }
    if (step >= hp.max_iters) {
      stop = StopReason::MaxIters;
      break;
    }
    const Vector g = objective.gradient(theta);
    if (!g.allFinite()) {
      stop = StopReason::Diverged;
      break;
    }
    velocity = hp.mu * velocity - g;
    const Vector delta = hp.eta * velocity;
    theta += delta;
    displacement = delta.norm();
    ++step;
    f = theta.allFinite() ? objective.value(theta) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(f)) stop = StopReason::Diverged;
    else best = std::min(best, f);
    if (tracing && (step % opts.trace_every == 0 || stop)) record();
  }

  out.final_theta = theta;
  out.final_f = f;
  out.final_v = f - hp.dV;
  out.best_f = best;
  out.final_dV = hp.dV;
  out.stop_reason = *stop;
  out.steps_taken = step;
  return out;
}

// ------------------------------------------------------------ by name

long long OptimizerSpec::max_iters() const { return name == "gdm" ? gdm.max_iters : bbi.max_iters; }

void OptimizerSpec::set_max_iters(long long n) {
  bbi.max_iters = n;
  gdm.max_iters = n;
}

void OptimizerSpec::set(const std::string& key, double value) {
  auto as_int = [&] { return static_cast<long long>(std::llround(value)); };
  if (key == "dt") bbi.dt = value;
  else if (key == "dV") bbi.dV = gdm.dV = value;
  else if (key == "dE") bbi.dE = value;
  else if (key == "T0") bbi.T0 = as_int();
  else if (key == "T1") bbi.T1 = as_int();
  else if (key == "Nb") bbi.Nb = as_int();
  else if (key == "eps1") bbi.eps1 = value;
  else if (key == "eps2") bbi.eps2 = gdm.eps2 = value;
  else if (key == "eta") gdm.eta = value;
  else if (key == "mu") gdm.mu = value;
  else if (key == "max_iters") set_max_iters(as_int());
  else throw Error(ErrorKind::InvalidArgument, "unknown hyperparameter '" + key + "'");
}

void OptimizerSpec::validate() const {
  if (name == "bbi" || name == "mecd") bbi.validate();
  else if (name == "gdm") gdm.validate();
  else throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + name + "'");
}

RunSummary run_optimizer(const OptimizerSpec& spec, const Objective& objective,
                         const Vector& theta0, std::uint64_t seed, const RunOptions& opts) {
  spec.validate();
  if (spec.name == "bbi") return bbi_run(objective, theta0, spec.bbi, seed, opts);
  if (spec.name == "mecd") return massive_ecd_run(objective, theta0, spec.bbi, seed, opts);
  RunSummary r = gdm_run(objective, theta0, spec.gdm, opts);
  r.seed = seed;
  return r;
}

}  // namespace ecd
