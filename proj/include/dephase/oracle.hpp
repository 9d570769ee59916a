#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dephase/filter.hpp"
#include "dephase/pulse.hpp"
#include "dephase/spectrum.hpp"

namespace dephase::oracle {

struct DephasingRun {
  pulse::PulseSequence sequence;
  noise::NoiseSpectrum spectrum = noise::NoiseSpectrum::white(0.0);
  std::size_t shots = 10000;
  std::uint64_t seed = 0;
  double dt = 0.0;  // s; 0 picks the default below
  std::size_t batches = 20;
};

// min(tau_pi/10, 1/(10 f_max)), f_max the frequency above which S falls
// below 1e-8 of its low-frequency level, further capped at tau_min/64 so
// the shortest sequence spans many cells.
double default_dt(const pulse::PulseSequence& seq,
                  const noise::NoiseSpectrum& spectrum, double tau_min);

// Power-of-two sample count long enough for tau_max (twice over, so the
// periodic synthesis never wraps inside a shot) and fine enough in
// frequency to resolve the spectrum's low-frequency structure.
std::size_t trace_length(const noise::NoiseSpectrum& spectrum, double dt,
                         double tau_max);

// W(tau) = |mean over shots of exp(i phi)|, phi = Integral y(t) beta(t) dt
// with beta held constant over each dt cell. Shots are split over OpenMP
// threads; each shot draws a fresh trace from stream_seed(seed, shot), so
// output is independent of the thread count.
filter::CoherenceCurve simulate_coherence(const DephasingRun& run,
                                          std::span<const double> taus);
filter::CoherenceCurve simulate_coherence_serial(const DephasingRun& run,
                                                 std::span<const double> taus);

// Several sequences evaluated on the same traces; run.sequence only sets
// the pulse width used for the default dt. taus[k] belongs to sequences[k].
std::vector<filter::CoherenceCurve> simulate_coherence(
    const DephasingRun& run, std::span<const pulse::PulseSequence> sequences,
    std::span<const std::vector<double>> taus);

struct FringeCurve {
  std::vector<double> time;
  std::vector<double> population;  // P_up
  std::vector<double> coherence;   // W_mc
  std::vector<double> uncertainty; // standard error of W_mc
};

// P_up(t) = (1 - W(t) cos(2 pi detuning t)) / 2 for a Ramsey pair ending in
// the dark state at zero phase. With ions > 0 each point is replaced by a
// binomial draw over that many detected spins.
FringeCurve simulate_ramsey_fringes(const DephasingRun& run,
                                    double detuning_hz,
                                    std::span<const double> times,
                                    std::size_t ions = 0);

}  // namespace dephase::oracle
