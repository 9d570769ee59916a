#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "dephase/error.hpp"
#include "dephase/rb.hpp"

using namespace dephase;
using namespace dephase::rb;

namespace {

bool raises(ErrorKind kind, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

const std::vector<std::size_t> kLengths{1, 10, 25, 50, 75, 100, 125, 150, 175, 200};

}  // namespace

TEST_CASE("ideal sequences end in the dark state") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t l : {1, 2, 7, 60}) {
      const auto gates = generate_sequence(l, seed);
      REQUIRE(gates.size() == 2 * l + 1);
      const auto v = rotate(ideal_rotation(gates), Vec3{0.0, 0.0, 1.0});
      REQUIRE(v[2] == doctest::Approx(-1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("gate set") {
  const double pi = std::acos(-1.0);
  for (const auto& g : generate_sequence(100, 3)) {
    if (g.kind == GateKind::Pauli) REQUIRE(g.angle == doctest::Approx(pi));
    if (g.kind == GateKind::Clifford) REQUIRE(g.angle == doctest::Approx(pi / 2));
    REQUIRE(g.angle >= 0.0);
  }
}

TEST_CASE("rotation composition agrees with a quaternion oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gates = generate_sequence(40, seed);
    const auto m = ideal_rotation(gates);
    const auto q = oracle_support::quaternion_rotation(gates);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) REQUIRE(std::abs(m[i][j] - q[i][j]) <= 1e-10);
    }
  }
}

TEST_CASE("error-free runs have unit fidelity") {
  Experiment e;
  e.lengths = kLengths;
  e.seed = 4;
  const auto d = run_experiment(e);
  for (const auto& row : d.fidelity) {
    for (double f : row) REQUIRE(f == 1.0);
  }
}

TEST_CASE("complete depolarization") {
  Experiment e;
  e.lengths = {1, 5, 50};
  e.errors.depolarizing = 0.5;
  e.measurements = 0;
  const auto d = run_experiment(e);
  for (double m : d.mean) CHECK(m == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("injected depolarizing error is recovered") {
  Experiment e;
  e.lengths = kLengths;
  e.runs = 20;
  e.errors.depolarizing = 8e-4;
  e.seed = 0;
  const auto r = simulate(e);
  CHECK(std::abs(r.fit.error_per_gate - 8e-4) <= r.fit.ci);
  CHECK(r.fit.ci > 3e-5);
  CHECK(r.fit.ci < 3e-4);
}

TEST_CASE("recovery across error rates") {
  for (double p : {1e-4, 1e-3, 1e-2}) {
    Experiment e;
    e.lengths = kLengths;
    e.runs = 50;
    e.errors.depolarizing = p;
    e.measurements = 0;
    e.seed = 12;
    const auto r = simulate(e);
    CHECK(r.fit.error_per_gate == doctest::Approx(p).epsilon(0.15));
  }
}

TEST_CASE("decay is monotone and approaches one half") {
  Experiment e;
  e.lengths = {1, 50, 100, 200, 400, 800};
  e.runs = 40;
  e.errors.depolarizing = 5e-3;
  e.seed = 2;
  const auto d = run_experiment(e);
  for (std::size_t i = 1; i < d.mean.size(); ++i) {
    CHECK(d.mean[i] <= d.mean[i - 1] + 3 * std::hypot(d.sem[i], d.sem[i - 1]));
  }
  CHECK(d.mean.back() == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("over-rotation error is second order") {
  std::vector<double> eps{0.005, 0.01, 0.02}, pg;
  for (double x : eps) {
    Experiment e;
    e.lengths = kLengths;
    e.runs = 50;
    e.measurements = 0;
    e.errors.over_rotation = x;
    e.seed = 6;
    pg.push_back(simulate(e).fit.error_per_gate);
  }
  // exact quadratic through the three points: p = a e^2 + b e + c
  const double d1 = (pg[1] - pg[0]) / (eps[1] - eps[0]);
  const double d2 = (pg[2] - pg[1]) / (eps[2] - eps[1]);
  const double a = (d2 - d1) / (eps[2] - eps[0]);
  const double b = d1 - a * (eps[0] + eps[1]);
  const double c = pg[0] - a * eps[0] * eps[0] - b * eps[0];
  CHECK(a > 0.0);
  CHECK(std::abs(b * eps[1]) < 0.1 * a * eps[1] * eps[1]);
  CHECK(std::abs(c) < 0.1 * a * eps[1] * eps[1]);
  CHECK(pg[2] / pg[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("detuning noise degrades fidelity") {
  Experiment e;
  e.lengths = {1, 50, 100};
  e.runs = 30;
  e.measurements = 0;
  e.errors.detuning_rms = 2000.0;
  e.seed = 1;
  const auto d = run_experiment(e);
  CHECK(d.mean.back() < 0.999);
  CHECK(d.mean.back() > 0.5);
}

TEST_CASE("parallel and serial runs agree exactly") {
  Experiment e;
  e.lengths = {1, 20, 80};
  e.runs = 10;
  e.errors = {1e-3, 0.01, 50.0};
  e.seed = 99;
  const auto a = run_experiment(e);
  const auto b = run_experiment_serial(e);
  CHECK(a.fidelity == b.fidelity);
}

TEST_CASE("timing infidelity") {
  CHECK(timing_infidelity(232.5e-6, 50e-9) == doctest::Approx(1.14e-7).epsilon(0.01));
  CHECK(timing_infidelity_linear(232.5e-6, 50e-9) == doctest::Approx(2.15e-4).epsilon(0.01));
  CHECK(timing_infidelity(232.5e-6, 0.0) == 0.0);
  CHECK(timing_infidelity(232.5e-6, 232.5e-6) == doctest::Approx(1.0));
}

TEST_CASE("validation") {
  Experiment e;
  e.lengths = {0, 1};
  CHECK(raises(ErrorKind::InvalidArgument, [&] { run_experiment(e); }));
  e.lengths = {1, 2};
  e.errors.depolarizing = 0.7;
  CHECK(raises(ErrorKind::InvalidArgument, [&] { run_experiment(e); }));
  e.errors.depolarizing = 0.0;
  CHECK(raises(ErrorKind::FitFailure, [&] { simulate(e); }));
}
