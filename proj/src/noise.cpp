#include "dephase/noise.hpp"

#include <cmath>
#include <complex>
#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <numbers>
#include <random>
#include <vector>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/quadrature.hpp"
#include "dephase/rng.hpp"
#include "fft.hpp"

namespace dephase::noise {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

void check_nyquist(const NoiseSpectrum& spectrum, double dt) {
  require(std::isfinite(dt) && dt > 0.0, "sample interval must be positive");
  const double nyquist = constants::pi / dt;
  const double support = spectrum.support_limit();
  if (spectrum.strength() > 0.0 && std::isfinite(support) &&
      support > nyquist) {
    fail(ErrorKind::NyquistViolation,
         "spectrum support " + std::to_string(support) +
             " rad/s exceeds Nyquist " + std::to_string(nyquist) + " rad/s");
  }
}

std::vector<double> mode_sigmas(const NoiseSpectrum& spectrum, double dt,
                                std::size_t n) {
  require(is_power_of_two(n), "trace length must be a power of two >= 2");
  check_nyquist(spectrum, dt);
  const std::size_t half = n / 2;
  std::vector<double> sigma(half + 1, 0.0);
  if (spectrum.strength() == 0.0) return sigma;
  const double d_omega = constants::two_pi / (static_cast<double>(n) * dt);
  const double norm = 4.0 / (static_cast<double>(n) * dt);
  auto bps = spectrum.breakpoints();
  std::sort(bps.begin(), bps.end());
  quad::Options opt;
  opt.rel_tol = 1e-8;
  opt.max_panels = 2000;
  std::vector<double> breaks;
  for (std::size_t k = 0; k <= half; ++k) {
    const double c = d_omega * static_cast<double>(k);
    const double a = k == 0 ? 0.0 : c - 0.5 * d_omega;
    const double b = k == half ? c : c + 0.5 * d_omega;
    breaks.assign({a});
    for (auto it = std::upper_bound(bps.begin(), bps.end(), a);
         it != bps.end() && *it < b; ++it) {
      breaks.push_back(*it);
    }
    breaks.push_back(b);
    const double mean =
        quad::integrate([&](double w) { return spectrum(w); }, breaks, opt)
            .value /
        (b - a);
    sigma[k] = std::sqrt(norm * std::max(mean, 0.0));
  }
  return sigma;
}

void synthesize_into(std::span<const double> sigmas, std::uint64_t seed,
                     std::span<double> out) {
  const std::size_t n = out.size();
  require(is_power_of_two(n) && sigmas.size() == n / 2 + 1,
          "mode table does not match the trace length");
  const std::size_t half = n / 2;
  std::vector<std::complex<double>> coeff(half + 1);
  Engine engine = make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double r = std::numbers::sqrt2 / 2.0;
  for (std::size_t k = 0; k <= half; ++k) {
    if (k == 0 || k == half) {
      coeff[k] = {sigmas[k] * gauss(engine), 0.0};
    } else {
      const double re = gauss(engine);
      const double im = gauss(engine);
      coeff[k] = {sigmas[k] * re * r, sigmas[k] * im * r};
    }
  }
  detail::inverse_real_fft(coeff, out);
}

void synthesize_into(const NoiseSpectrum& spectrum, double dt,
                     std::uint64_t seed, std::span<double> out) {
  const auto sigma = mode_sigmas(spectrum, dt, out.size());
  synthesize_into(sigma, seed, out);
}

NoiseTrace synthesize_trace(const NoiseSpectrum& spectrum, double dt,
                            std::size_t n, std::uint64_t seed) {
  NoiseTrace trace;
  trace.dt = dt;
  trace.seed = seed;
  trace.samples.resize(n);
  synthesize_into(spectrum, dt, seed, trace.samples);
  return trace;
}

Tabulated estimate_psd(std::span<const NoiseTrace> traces,
                       std::size_t segment_length) {
  require(!traces.empty(), "no traces supplied");
  require(is_power_of_two(segment_length),
          "segment length must be a power of two >= 2");
  const double dt = traces.front().dt;
  for (const auto& t : traces) {
    require(t.dt == dt, "traces must share a sample interval");
    require(t.samples.size() >= 2, "trace needs at least two samples");
    if (segment_length > t.samples.size()) {
      fail(ErrorKind::SegmentTooLong,
           "segment length exceeds trace length");
    }
  }
  const std::size_t len = segment_length;
  const std::size_t half = len / 2;
  std::vector<double> window(len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    // periodic Hann
    window[i] = 0.5 - 0.5 * std::cos(constants::two_pi * static_cast<double>(i) /
                                     static_cast<double>(len));
    window_power += window[i] * window[i];
  }
  std::vector<double> acc(half + 1, 0.0);
  std::vector<double> buf(len);
  std::vector<std::complex<double>> spec(half + 1);
  std::size_t segments = 0;
  const std::size_t step = len / 2;
  for (const auto& t : traces) {
    for (std::size_t start = 0; start + len <= t.samples.size();
         start += step) {
      for (std::size_t i = 0; i < len; ++i) {
        buf[i] = t.samples[start + i] * window[i];
      }
      detail::forward_real_fft(buf, spec);
      for (std::size_t k = 0; k <= half; ++k) acc[k] += std::norm(spec[k]);
      ++segments;
    }
  }
  Tabulated out;
  out.omega.resize(half + 1);
  out.value.resize(half + 1);
  const double d_omega = constants::two_pi / (static_cast<double>(len) * dt);
  // two-sided periodogram dt |X|^2 / sum w^2 estimates 4 S
  const double scale = dt / (window_power * static_cast<double>(segments) * 4.0);
  for (std::size_t k = 0; k <= half; ++k) {
    out.omega[k] = d_omega * static_cast<double>(k);
    out.value[k] = acc[k] * scale;
  }
  return out;
}

Tabulated estimate_psd(const NoiseTrace& trace, std::size_t segment_length) {
  return estimate_psd(std::span<const NoiseTrace>(&trace, 1), segment_length);
}

double integrated_rms(const NoiseSpectrum& spectrum, double omega_a,
                      double omega_b) {
  require(omega_a >= 0.0 && omega_b > omega_a, "band must satisfy 0 <= a < b");
  if (spectrum.strength() == 0.0) return 0.0;
  omega_b = std::min(omega_b, spectrum.support_limit());
  if (omega_b <= omega_a) return 0.0;
  quad::Options opt;
  opt.rel_tol = 1e-10;
  auto s = [&](double w) { return spectrum(w); };
  std::vector<double> breaks{omega_a};
  for (double b : spectrum.breakpoints()) {
    if (b > omega_a && b < omega_b) breaks.push_back(b);
  }
  double integral = 0.0;
  if (std::isfinite(omega_b)) {
    breaks.push_back(omega_b);
    integral = quad::integrate(s, breaks, opt).value;
  } else {
    const auto* law = std::get_if<AmbientPowerLaw>(&spectrum.shape());
    if (law == nullptr || law->exponent <= 1.0) {
      return std::numeric_limits<double>::infinity();
    }
    const double last = std::max({breaks.back(), 2.0 * omega_a, 1.0});
    breaks.push_back(last);
    integral = quad::integrate(s, breaks, opt).value;
    // [last, inf) mapped onto (0, 1] by w = last / u
    const double u_edges[] = {0.0, 1.0};
    integral += quad::integrate(
                    [&](double u) { return spectrum(last / u) * last / (u * u); },
                    u_edges, opt)
                    .value;
  }
  return std::sqrt(4.0 / constants::pi * integral);
}

double phase_noise_stepup(double factor) {
  require(std::isfinite(factor) && factor > 0.0,
          "multiplication factor must be positive");
  return 20.0 * std::log10(factor);
}

double fit_loglog_slope(const Tabulated& table, double omega_a,
                        double omega_b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < table.omega.size(); ++i) {
    const double w = table.omega[i];
    const double s = table.value[i];
    if (w < omega_a || w > omega_b || !(w > 0.0) || !(s > 0.0)) continue;
    const double x = std::log(w), y = std::log(s);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  require(count >= 2, "fewer than two positive points in fit band");
  const double n = static_cast<double>(count);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_trace_csv(std::ostream& out, const NoiseTrace& trace) {
  out << "t,beta\n";
  out << std::setprecision(12);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    out << trace.dt * static_cast<double>(i) << ',' << trace.samples[i] << '\n';
  }
}

}  // namespace dephase::noise
