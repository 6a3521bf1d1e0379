#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ecd/core.hpp"
#include "ecd/io.hpp"

using namespace ecd;

TEST_CASE("splitmix64 reference outputs") {
  // Published SplitMix64 sequence for seed 0.
  Rng rng(0);
  CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next_u64() == 0x06C45D188009454FULL);
}

TEST_CASE("uniform and normal draws") {
  Rng rng(123);
  double sum = 0.0;
  double sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.01);

  Rng a(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform_pos();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
}

TEST_CASE("derive_seed") {
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
  for (std::uint64_t s : {0ULL, 1ULL, 42ULL, 2022ULL, ~0ULL}) {
    CHECK(derive_seed(s, 0) != derive_seed(s, 1));
  }
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i <= 1000; ++i) seen.insert(derive_seed(2022, i));
  CHECK(seen.size() == 1001);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("vector_norm") {
  CHECK(vector_norm((Vector(2) << 3, 4).finished()) == doctest::Approx(5.0));
  CHECK(vector_norm(Vector::Zero(7)) == 0.0);
  CHECK(vector_norm(Vector::Ones(4)) == doctest::Approx(2.0));
  Vector bad = Vector::Ones(3);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(vector_norm(bad), Error);
  try {
    vector_norm(bad);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteValue);
  }
  bad[1] = INFINITY;
  CHECK_FALSE(all_finite(bad));
}

TEST_CASE("hyperparameter validation") {
  BbiHyperParams hp;
  CHECK_NOTHROW(hp.validate());
  auto rejects = [](BbiHyperParams h) {
    try {
      h.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::InvalidArgument;
    }
    return false;
  };
  BbiHyperParams h = hp;
  h.dt = 0;
  CHECK(rejects(h));
  h = hp;
  h.T0 = 0;
  CHECK(rejects(h));
  h = hp;
  h.T1 = 0;
  CHECK(rejects(h));
  h = hp;
  h.eps1 = 0;
  CHECK(rejects(h));
  h = hp;
  h.eps2 = 1e-9;
  CHECK(rejects(h));
  h = hp;
  h.dE = -1;
  CHECK(rejects(h));
  h = hp;
  h.Nb = -1;
  CHECK(rejects(h));
}

TEST_CASE("stop reason names round-trip") {
  for (auto r : {StopReason::Converged, StopReason::MaxIters, StopReason::NegativeLoss,
                 StopReason::Diverged}) {
    CHECK(stop_reason_from_string(to_string(r)) == r);
  }
  CHECK(reached_target(StopReason::Converged));
  CHECK(reached_target(StopReason::NegativeLoss));
  CHECK_FALSE(reached_target(StopReason::MaxIters));
}

TEST_CASE("state serialization round-trips exactly") {
  Rng gen(99);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 1 + static_cast<Index>(gen.next_u64() % 12);
    EcdState s;
    s.theta = random_normal(gen, n) * 1e3;
    s.pi = random_normal(gen, n) * 1e-7;
    s.energy = gen.uniform() * 10 + 1e-300;
    s.v_current = gen.normal() * 1e-20;
    s.v_best = gen.normal();
    s.f_best = gen.normal() / 3.0;
    s.dV = gen.uniform() * 1e-22;
    s.c0 = static_cast<long long>(gen.next_u64() % 1000);
    s.c1 = static_cast<long long>(gen.next_u64() % 1000);
    s.n_b = static_cast<long long>(gen.next_u64() % 10);
    s.step = static_cast<long long>(gen.next_u64() % 1000000);
    s.bounces = static_cast<long long>(gen.next_u64() % 1000);
    s.rng = Rng(gen.next_u64());

    const std::string text = to_json(s).dump();
    const EcdState back = state_from_json(json::parse(text));
    CHECK(back == s);
  }
}

TEST_CASE("hyperparameter JSON") {
  BbiHyperParams hp;
  hp.dt = 3e-5;
  hp.T1 = 750;
  hp.adapt_dV = true;
  BbiHyperParams back;
  update_from_json(back, json::parse(to_json(hp).dump()));
  CHECK(back == hp);

  BbiHyperParams partial;
  update_from_json(partial, json{{"Nb", 1}});
  CHECK(partial.Nb == 1);
  CHECK(partial.dt == BbiHyperParams{}.dt);

  try {
    update_from_json(partial, json{{"bogus", 1}});
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }
}

TEST_CASE("format_double is shortest round-trip") {
  Rng gen(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = gen.normal() * std::pow(10.0, gen.normal() * 30);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("trace CSV layout") {
  std::vector<TraceRecord> trace(2);
  trace[0] = {0, 1.5, 0.0, 0.0, 0.0, false, 1.0};
  trace[1] = {10, 0.25, 2.0, 0.5, -1e-12, true, 0.5};
  std::ostringstream os;
  write_trace_csv(os, trace);
  CHECK(os.str() ==
        "step,V,pi_norm,speed,energy_err,bounce\n"
        "0,1.5,0,0,0,0\n"
        "10,0.25,2,0.5,-1e-12,1\n");
}
