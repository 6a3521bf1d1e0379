#include "ecd/core.hpp"

#include <cmath>
#include <numbers>

namespace ecd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveInitialLoss: return "NonPositiveInitialLoss";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::CalibrationFailed: return "CalibrationFailed";
    case ErrorKind::RefinementFailed: return "RefinementFailed";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::SearchFailed: return "SearchFailed";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index) {
  // Two rounds so that nearby bases and nearby indices both avalanche.
  return mix64(mix64(base_seed + kGolden) ^ (run_index * kGolden + 0x632BE59BD9B4E019ULL));
}

Vector random_normal(Rng& rng, Index n) {
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = rng.normal();
  return out;
}

bool all_finite(const Vector& p) { return p.allFinite(); }

double vector_norm(const Vector& p) {
  if (!p.allFinite()) throw Error(ErrorKind::NonFiniteValue, "vector has a non-finite component");
  return p.norm();
}

void BbiHyperParams::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, msg);
  };
  require(dt > 0 && std::isfinite(dt), "dt must be positive");
  require(dV >= 0 && std::isfinite(dV), "dV must be non-negative");
  require(dE >= 0 && std::isfinite(dE), "dE must be non-negative");
  require(T0 >= 1, "T0 must be >= 1");
  require(T1 >= 1, "T1 must be >= 1");
  require(Nb >= 0, "Nb must be >= 0");
  require(eps1 > 0, "eps1 must be positive");
  require(eps2 > 0, "eps2 must be positive");
  require(eps2 < eps1, "eps2 must be smaller than eps1");
  require(max_iters >= 0, "max_iters must be non-negative");
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "Converged";
    case StopReason::MaxIters: return "MaxIters";
    case StopReason::NegativeLoss: return "NegativeLoss";
    case StopReason::Diverged: return "Diverged";
  }
  return "Unknown";
}

StopReason stop_reason_from_string(std::string_view s) {
  if (s == "Converged") return StopReason::Converged;
  if (s == "MaxIters") return StopReason::MaxIters;
  if (s == "NegativeLoss") return StopReason::NegativeLoss;
  if (s == "Diverged") return StopReason::Diverged;
  throw Error(ErrorKind::ParseError, "unknown stop reason '" + std::string(s) + "'");
}

}  // namespace ecd
