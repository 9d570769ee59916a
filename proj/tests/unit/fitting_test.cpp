#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/filter.hpp"
#include "dephase/fitting.hpp"

using namespace dephase;
using namespace dephase::fit;
using constants::two_pi;
using std::numbers::pi;

namespace {

bool raises(ErrorKind kind, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

constexpr double kPiTime = 185e-6;
constexpr double kOmega0 = two_pi * 1.24e11;

Lineshape lineshape(double theta, std::size_t points, std::mt19937_64* rng = nullptr,
                    std::size_t ions = 0, std::size_t averages = 0) {
  Lineshape l;
  l.theta = theta;
  const double rabi = two_pi / kPiTime;
  for (std::size_t i = 0; i < points; ++i) {
    const double w = kOmega0 + rabi * (-4.0 + 8.0 * i / (points - 1.0));
    double p = rabi_lineshape({kOmega0, kPiTime, theta}, w);
    if (rng) {
      double acc = 0.0;
      for (std::size_t a = 0; a < averages; ++a) {
        std::binomial_distribution<std::size_t> draw(ions, p);
        acc += static_cast<double>(draw(*rng)) / ions;
      }
      p = acc / averages;
    }
    l.omega.push_back(w);
    l.p_up.push_back(p);
  }
  return l;
}

}  // namespace

TEST_CASE("rabi lineshape") {
  const RabiModel pi_pulse{kOmega0, kPiTime, pi};
  CHECK(rabi_lineshape(pi_pulse, kOmega0) == doctest::Approx(0.0));
  CHECK(rabi_lineshape({kOmega0, kPiTime, 2 * pi}, kOmega0) == doctest::Approx(1.0));
  const double step = two_pi / kPiTime;
  CHECK(rabi_lineshape(pi_pulse, kOmega0 + std::sqrt(3.0) * step) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rabi_lineshape(pi_pulse, kOmega0 - std::sqrt(3.0) * step) == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0), th(0.1, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const RabiModel m{kOmega0, kPiTime, th(rng)};
    const double x = u(rng) * step;
    const double p = rabi_lineshape(m, kOmega0 + x);
    REQUIRE(p >= 0.0);
    REQUIRE(p <= 1.0);
    REQUIRE(p == doctest::Approx(rabi_lineshape(m, kOmega0 - x)).epsilon(1e-12));
  }
}

TEST_CASE("noiseless resonance fit") {
  const auto l = lineshape(pi, 61);
  const auto r = fit_resonance(l.omega, l.p_up, kPiTime, pi);
  CHECK(std::abs(r.omega0 - kOmega0) <= 1e-9 * two_pi / kPiTime);
}

TEST_CASE("resonance fit with projection noise") {
  std::mt19937_64 rng(2);
  const auto l = lineshape(pi, 61, &rng, 1000, 20);
  const auto r = fit_resonance(l.omega, l.p_up, kPiTime, pi, {1000 * 20});
  CHECK(std::abs(r.omega0 - kOmega0) <= 3 * r.ci);
  CHECK(r.ci > 0.0);
}

TEST_CASE("joint fit over several rotation angles") {
  std::mt19937_64 rng(3);
  std::vector<Lineshape> data;
  for (double k : {1.0, 2.0, 3.0, 4.0}) data.push_back(lineshape(k * pi, 81, &rng, 1000, 20));
  const auto r = fit_resonance(data, kPiTime, {1000 * 20});
  CHECK(std::abs(r.omega0 - kOmega0) <= 3 * r.ci);
  CHECK(r.reduced_chi2 < 2.0);
}

TEST_CASE("resonance fit is unbiased") {
  std::mt19937_64 rng(4);
  double sum = 0.0, ci = 0.0;
  const int runs = 500;
  for (int i = 0; i < runs; ++i) {
    const auto l = lineshape(pi, 41, &rng, 100, 1);
    const auto r = fit_resonance(l.omega, l.p_up, kPiTime, pi, {100});
    sum += r.omega0 - kOmega0;
    ci += r.ci;
  }
  CHECK(std::abs(sum / runs) <= 0.1 * ci / runs);
}

TEST_CASE("poor resonance fit is flagged") {
  auto l = lineshape(pi, 41);
  for (std::size_t i = 0; i < l.p_up.size(); i += 2) l.p_up[i] = 1.0 - l.p_up[i];
  CHECK(raises(ErrorKind::PoorFit, [&] { fit_resonance(l.omega, l.p_up, kPiTime, pi, {1000}); }));
}

TEST_CASE("noise-strength calibration round trip") {
  const auto shape = noise::NoiseSpectrum::ambient(1.0, 4.0, two_pi * 30);
  const double alpha = 1.0 / filter::chi_shape(pulse::ramsey(), 2.4e-3, shape).chi;
  const auto tau = filter::linspace(2e-4, 5e-3, 20);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.005);
  std::vector<double> loss, sigma;
  for (double t : tau) {
    const double w = std::exp(-alpha * filter::chi_shape(pulse::ramsey(), t, shape).chi);
    loss.push_back(0.5 * (1.0 - w) + noise(rng));
    sigma.push_back(0.005);
  }
  const auto r = calibrate_alpha(tau, loss, sigma, shape);
  CHECK(r.alpha / alpha == doctest::Approx(1.0).epsilon(0.05));
  std::vector<double> flat(tau.size(), 0.0);
  CHECK(raises(ErrorKind::Degenerate, [&] { calibrate_alpha(tau, flat, {}, shape); }));
}

TEST_CASE("spin-lock decay constant") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto t = filter::linspace(0.0, 2.0, 40);
  std::vector<double> y, s(t.size(), 0.01);
  for (double x : t) y.push_back(std::exp(-x / 0.688) + noise(rng));
  const auto r = fit_decay(t, y, s, DecayModel::Exponential);
  CHECK(r.time_constant == doctest::Approx(0.688).epsilon(0.05));
}

TEST_CASE("decay model selection") {
  const auto t = filter::linspace(0.0, 3.0, 60);
  std::vector<double> gauss;
  for (double x : t) gauss.push_back(std::exp(-x * x));
  const auto e = fit_decay(t, gauss, {}, DecayModel::Exponential);
  const auto g = fit_decay(t, gauss, {}, DecayModel::Gaussian);
  CHECK(e.residual_norm > g.residual_norm);
  CHECK(g.time_constant == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixed decay leaves structured residuals in both models") {
  const auto t = filter::linspace(0.0, 4.0, 80);
  std::vector<double> y;
  for (double x : t) y.push_back(std::exp(-x / 1.5) * std::exp(-std::pow(x / 2.0, 2)));
  const auto e = fit_decay(t, y, {}, DecayModel::Exponential);
  const auto g = fit_decay(t, y, {}, DecayModel::Gaussian);
  CHECK(e.structured());
  CHECK(g.structured());
}

TEST_CASE("runs statistic") {
  CHECK(runs_statistic(std::vector{1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0}) > 2.0);
  CHECK(runs_statistic(std::vector{1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0}) < -2.0);
}

TEST_CASE("fluorescence normalization") {
  const double bright = 1e4;
  CHECK(normalize_fluorescence(bright, std::vector<double>(10, bright)).p_up == doctest::Approx(1.0));
  CHECK(normalize_fluorescence(bright, std::vector<double>(10, 0.0)).p_up == doctest::Approx(0.0));
  // rate 0.2 -> 0.4 of bright across the readout window, sampled at bin centres
  const std::size_t bins = 10;
  const double width = 10e-3, window = bins * width;
  std::vector<double> rising;
  for (std::size_t k = 0; k < bins; ++k) {
    const double t = (k + 0.5) * width;
    rising.push_back(bright * (0.2 + 0.2 * t / window));
  }
  const auto f = normalize_fluorescence(bright, rising, width);
  CHECK(f.p_up == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(f.slope > 0.0);
  std::vector<double> falling{10.0, 50.0, 90.0};
  CHECK(normalize_fluorescence(bright, falling).negative_rate);
}

TEST_CASE("sinusoid fit") {
  std::vector<double> t, y;
  for (int i = 0; i < 200; ++i) {
    t.push_back(i * 1e-6);
    y.push_back(0.3 + 0.2 * std::cos(two_pi * 37e3 * t.back() + 1.1));
  }
  const auto r = fit_sinusoid(t, y, 5e3, 200e3);
  CHECK(r.frequency == doctest::Approx(37e3).epsilon(1e-9));
  CHECK(r.phase == doctest::Approx(1.1).epsilon(1e-9));
  CHECK(r.amplitude == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(r.offset == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("generic least squares") {
  const Model line = [](double x, std::span<const double> p) { return p[0] + p[1] * x; };
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto r = least_squares(line, x, y, {}, {0.0, 0.0});
  CHECK(r.params[0] == doctest::Approx(1.0));
  CHECK(r.params[1] == doctest::Approx(2.0));
  CHECK(r.converged);
}
