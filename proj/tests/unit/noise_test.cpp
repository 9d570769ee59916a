#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/filter.hpp"
#include "dephase/noise.hpp"
#include "dephase/rng.hpp"

using namespace dephase;
using namespace dephase::noise;
using constants::two_pi;

namespace {

bool raises(ErrorKind kind, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

Tabulated round_trip(const NoiseSpectrum& s, double dt, std::size_t n,
                     std::size_t traces, std::size_t segment, std::uint64_t seed) {
  std::vector<NoiseTrace> list;
  for (std::size_t i = 0; i < traces; ++i) {
    list.push_back(synthesize_trace(s, dt, n, stream_seed(seed, i)));
  }
  return estimate_psd(list, segment);
}

// rms of estimate/model - 1 over bins in [lo, hi] where the model is
// nonzero, skipping `guard` bins on either side of any breakpoint.
double rms_error(const Tabulated& t, const NoiseSpectrum& s, double lo, double hi,
                 std::size_t guard = 3) {
  const double bin = t.omega[1] - t.omega[0];
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < t.omega.size(); ++k) {
    const double w = t.omega[k];
    if (w < lo || w > hi) continue;
    bool near = false;
    for (double b : s.breakpoints()) near |= std::abs(w - b) <= guard * bin;
    const double model = s(w);
    if (near || model <= 0.0) continue;
    const double r = t.value[k] / model - 1.0;
    sum += r * r;
    ++count;
  }
  REQUIRE(count > 10);
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace

TEST_CASE("spectrum shapes") {
  const auto ohmic = NoiseSpectrum::ohmic(1.0, two_pi * 500);
  CHECK(ohmic(two_pi * 501) == 0.0);
  CHECK(ohmic(two_pi * 499) == doctest::Approx(two_pi * 499));
  const auto zero = NoiseSpectrum::white(0.0);
  for (double w : {0.0, 1.0, 1e6}) CHECK(zero(w) == 0.0);
  const auto amb = NoiseSpectrum::ambient(3.0, 4.0, two_pi * 30);
  for (double w0 : {two_pi * 30, two_pi * 77.0, two_pi * 1e3}) {
    CHECK(amb(2 * w0) / amb(w0) == doctest::Approx(1.0 / 16).epsilon(1e-13));
  }
  CHECK(amb(1.0) == amb(two_pi * 30));
  CHECK(raises(ErrorKind::NegativeFrequency, [&] { amb(-1.0); }));
}

TEST_CASE("tabulated spectrum interpolates log-log") {
  const auto t = NoiseSpectrum::tabulated({1.0, 10.0, 100.0}, {1.0, 1e-2, 1e-4});
  CHECK(t(std::sqrt(10.0)) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(t(1000.0) == 0.0);
  CHECK(raises(ErrorKind::InvalidArgument, [] { NoiseSpectrum::tabulated({2.0, 1.0}, {1.0, 1.0}); }));
}

TEST_CASE("zero spectrum gives a zero trace") {
  const auto tr = synthesize_trace(NoiseSpectrum::white(0.0), 1e-4, 1024, 5);
  for (double x : tr.samples) REQUIRE(x == 0.0);
  const auto psd = estimate_psd(tr, 256);
  for (double v : psd.value) REQUIRE(v == 0.0);
}

TEST_CASE("synthesis is reproducible and seed dependent") {
  const auto s = NoiseSpectrum::ohmic(2.0, two_pi * 500);
  const auto a = synthesize_trace(s, 1e-4, 4096, 9);
  const auto b = synthesize_trace(s, 1e-4, 4096, 9);
  const auto c = synthesize_trace(s, 1e-4, 4096, 10);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK(raises(ErrorKind::InvalidArgument, [&] { synthesize_trace(s, 1e-4, 1000, 1); }));
}

TEST_CASE("white periodogram over 200 seeds is flat") {
  const double s0 = 2.5;
  const auto s = NoiseSpectrum::white(s0);
  const double dt = 1e-4;
  const auto psd = round_trip(s, dt, 4096, 200, 256, 1);
  CHECK(rms_error(psd, s, psd.omega[1], psd.omega.back() * 0.999) < 0.1);
  double mean = 0.0;
  for (std::size_t k = 1; k < psd.value.size(); ++k) mean += psd.value[k];
  mean /= static_cast<double>(psd.value.size() - 1);
  CHECK(mean / s0 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("ohmic periodogram slope below the cutoff") {
  const auto s = NoiseSpectrum::ohmic(1.0, two_pi * 500);
  const auto psd = round_trip(s, 1e-4, 65536, 8, 4096, 2);
  CHECK(fit_loglog_slope(psd, two_pi * 20, two_pi * 400) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ambient power law round trip exponent") {
  const auto s = NoiseSpectrum::ambient(1.0, 4.0, two_pi * 30);
  const auto psd = round_trip(s, 1e-4, 65536, 8, 4096, 3);
  CHECK(fit_loglog_slope(psd, two_pi * 60, two_pi * 1000) == doctest::Approx(-4.0).epsilon(0.05));
}

TEST_CASE("round trip reproduces every built-in shape") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dt = 1e-4;
  const double nyq = std::numbers::pi / dt;
  for (int rep = 0; rep < 3; ++rep) {
    const double alpha = std::pow(10.0, -2.0 + 4.0 * u(rng));
    const double cut = two_pi * (200.0 + 2000.0 * u(rng));
    const double lo = two_pi * (10.0 + 50.0 * u(rng));
    const double bin = two_pi / (1024 * dt);
    const NoiseSpectrum shapes[] = {NoiseSpectrum::white(alpha),
                                    NoiseSpectrum::ohmic(alpha, cut),
                                    NoiseSpectrum::ambient(alpha, 2.0 + 2.0 * u(rng), lo)};
    for (const auto& s : shapes) {
      CAPTURE(s.kind_name());
      const auto psd = round_trip(s, dt, 65536, 8, 1024, 100 + rep);
      CHECK(rms_error(psd, s, 3 * bin, 0.9 * nyq) < 0.1);
    }
  }
}

TEST_CASE("synthesized variance matches the integrated rms") {
  const auto s = NoiseSpectrum::ohmic(3.0, two_pi * 500);
  const double dt = 1e-4;
  double sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t i = 0; i < 16; ++i) {
    for (double x : synthesize_trace(s, dt, 16384, i).samples) {
      sq += x * x;
      ++n;
    }
  }
  const double rms = integrated_rms(s, 0.0, std::numbers::pi / dt);
  CHECK(std::sqrt(sq / n) == doctest::Approx(rms).epsilon(0.02));
}

TEST_CASE("integrated rms") {
  CHECK(integrated_rms(NoiseSpectrum::white(0.0), 0.0, 1e4) == 0.0);
  // variance (4/pi) Integral S, i.e. twice sqrt(S0 W / pi) in amplitude
  const double s0 = 0.7, w = 3e3;
  CHECK(integrated_rms(NoiseSpectrum::white(s0), 0.0, w) ==
        doctest::Approx(2.0 * std::sqrt(s0 * w / std::numbers::pi)).epsilon(1e-10));
}

TEST_CASE("calibrated ambient field fluctuation") {
  const auto shape = NoiseSpectrum::ambient(1.0, 4.0, two_pi * 30);
  const double c = filter::chi_shape(pulse::ramsey(), 2.4e-3, shape).chi;
  const auto s = shape.with_strength(1.0 / c);
  const double rms = integrated_rms(s, 0.0, std::numeric_limits<double>::infinity());
  const double db_over_b = rms / two_pi / constants::qubit_field_sensitivity_hz_per_tesla /
                           constants::nominal_field_tesla;
  CHECK(db_over_b > 1e-9 / 3);
  CHECK(db_over_b < 1e-9 * 3);
}

TEST_CASE("phase-noise step-up") {
  CHECK(phase_noise_stepup(1240) == doctest::Approx(61.87).epsilon(1e-4));
  CHECK(phase_noise_stepup(1) == 0.0);
  CHECK(phase_noise_stepup(10) == doctest::Approx(20.0).epsilon(1e-14));
}

TEST_CASE("nyquist and segment checks") {
  const auto s = NoiseSpectrum::ohmic(1.0, two_pi * 500);
  CHECK(raises(ErrorKind::NyquistViolation, [&] { synthesize_trace(s, 2e-3, 1024, 1); }));
  const auto tr = synthesize_trace(s, 1e-4, 1024, 1);
  CHECK(raises(ErrorKind::SegmentTooLong, [&] { estimate_psd(tr, 2048); }));
}
