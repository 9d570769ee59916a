#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dephase/spectrum.hpp"

namespace dephase::noise {

struct NoiseTrace {
  double dt = 0.0;              // s
  std::vector<double> samples;  // beta_i, rad/s
  std::uint64_t seed = 0;

  double duration() const { return dt * static_cast<double>(samples.size()); }
};

// Stationary Gaussian trace with the two-sided PSD 4*S(w): independent
// complex Gaussian Fourier coefficients whose variance is proportional to
// the mean of S over the mode's frequency bin, Hermitian symmetry, inverse
// real FFT. Bin averaging keeps sharp cutoffs and narrow lines at their
// true weight. N must be a power of two.
// Unbounded shapes are truncated at the Nyquist frequency pi/dt; a hard
// support above pi/dt throws NyquistViolation.
NoiseTrace synthesize_trace(const NoiseSpectrum& spectrum, double dt,
                            std::size_t n, std::uint64_t seed);

// Same draw as synthesize_trace, written into a caller buffer of length n.
// Reentrant; used by the Monte Carlo kernels to avoid per-shot allocation.
void synthesize_into(const NoiseSpectrum& spectrum, double dt,
                     std::uint64_t seed, std::span<double> out);

// Standard deviations of the n/2 + 1 Fourier coefficients; depends only on
// (spectrum, dt, n), so Monte Carlo callers compute it once per run.
std::vector<double> mode_sigmas(const NoiseSpectrum& spectrum, double dt,
                                std::size_t n);
void synthesize_into(std::span<const double> sigmas, std::uint64_t seed,
                     std::span<double> out);

// Checks pi/dt against the spectrum's hard support.
void check_nyquist(const NoiseSpectrum& spectrum, double dt);

// Welch estimate (Hann window, 50 % overlap) in the same normalization as
// NoiseSpectrum, so synthesize -> estimate reproduces S in expectation.
// Returned table covers w_k = 2 pi k / (L dt), k = 0..L/2.
Tabulated estimate_psd(const NoiseTrace& trace, std::size_t segment_length);

// Averages estimate_psd over several traces sharing dt.
Tabulated estimate_psd(std::span<const NoiseTrace> traces,
                       std::size_t segment_length);

// rms of beta(t) contributed by [omega_a, omega_b]:
// sqrt((4/pi) * Integral S dw), the variance of the synthesized process.
double integrated_rms(const NoiseSpectrum& spectrum, double omega_a,
                      double omega_b);

// 20 log10(N): phase-noise increase under frequency multiplication by N.
double phase_noise_stepup(double factor);

// Least-squares slope of log S against log w over the table entries inside
// [omega_a, omega_b] with S > 0.
double fit_loglog_slope(const Tabulated& table, double omega_a,
                        double omega_b);

// CSV with header "t,beta".
void write_trace_csv(std::ostream& out, const NoiseTrace& trace);

}  // namespace dephase::noise
