#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dephase/filter.hpp"
#include "dephase/pulse.hpp"
#include "dephase/spectrum.hpp"

namespace dephase::opt {

struct Problem {
  std::size_t n = 1;
  double tau = 0.0;          // s
  double pulse_width = 0.0;  // s
  noise::NoiseSpectrum spectrum = noise::NoiseSpectrum::white(0.0);
  std::optional<pulse::PulseSequence> start;  // default udd(n, pulse_width)
  double margin = 0.0;       // extra clearance between pulses, fraction of tau
  double tolerance = 1e-4;   // relative chi improvement per sweep
  std::size_t max_iterations = 200;
  std::size_t restarts = 0;  // random feasible starts besides `start`
  std::uint64_t seed = 0;
};

struct Result {
  pulse::PulseSequence sequence;
  double chi = 0.0;        // full-tolerance chi of `sequence`
  double start_chi = 0.0;  // full-tolerance chi of the start
  std::vector<double> chi_trace;  // per sweep, on the fixed partition
  std::size_t iterations = 0;
  bool converged = false;
  bool stalled_at_constraint = false;  // a pulse ends pressed on a bound
};

// Coordinate-wise line search over the pulse positions. Moving one position
// between its neighbours is a transfer of length between two adjacent gaps,
// so ordering holds by construction. Each sweep is followed by a line search
// along the sweep's net displacement. Throws InfeasibleStart.
Result optimize(const Problem& problem);
// Restarts evaluated one after another; same result as optimize.
Result optimize_serial(const Problem& problem);

}  // namespace dephase::opt
