#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dephase/pulse.hpp"
#include "dephase/spectrum.hpp"

namespace dephase::filter {

// F(w tau) = 4 sin^2(w tau / 2).
double ramsey_filter(double omega_tau);

// Frequency-domain filter of an n-pulse sequence of length tau:
// |1 + (-1)^(n+1) e^(i w tau) + 2 sum_j (-1)^j e^(i d_j w tau) cos(w tau_pi/2)|^2
double dd_filter(const pulse::PulseSequence& seq, double tau, double omega);

// F(w tau) / w^2 evaluated from the edge representation without the 0/0 at
// w -> 0. Below `omega_floor` the quadratic Taylor value (Integral y dt)^2
// is returned.
double filter_over_omega_sq(std::span<const pulse::Edge> edges, double omega,
                            double omega_floor);

struct ChiOptions {
  double rel_tol = 1e-6;
  double omega_floor_factor = 1e-6;  // floor = factor * 2 pi / tau
  std::size_t max_panels = 400000;
};

struct ChiResult {
  double chi = 0.0;
  double error = 0.0;        // quadrature + truncation estimate
  double cutoff = 0.0;       // upper edge of the oscillatory region [rad/s]
  std::size_t evaluations = 0;
};

// chi(tau) = (2/pi) Integral_0^inf S(w)/w^2 F(w tau) dw. Throws
// NonConvergent (with the achieved error) or DivergentIntegrand.
ChiResult chi(const pulse::PulseSequence& seq, double tau,
              const noise::NoiseSpectrum& spectrum,
              const ChiOptions& options = {});

// chi for the unit-strength shape; chi is linear in alpha, so
// chi(alpha) = alpha * chi_shape exactly.
ChiResult chi_shape(const pulse::PulseSequence& seq, double tau,
                    const noise::NoiseSpectrum& spectrum,
                    const ChiOptions& options = {});

// Fixed-panel evaluation used by iterative callers: the oscillatory region
// [0, partition.back()] is integrated on the given panels and the tail above
// it uses the frequency-averaged filter. Smooth in the pulse positions.
struct FixedPartition {
  std::vector<double> breaks;
  bool has_tail = false;
  double tail = 0.0;  // Integral_{breaks.back()}^inf S_unit(w)/w^2 dw
};
FixedPartition chi_partition(const pulse::PulseSequence& seq, double tau,
                             const noise::NoiseSpectrum& spectrum,
                             const ChiOptions& options = {});
// Returns chi and the bound on the tail's oscillatory remainder.
std::pair<double, double> chi_fixed(std::span<const pulse::Edge> edges,
                                    double tau,
                                    const noise::NoiseSpectrum& spectrum,
                                    const FixedPartition& partition);

enum class Method { Analytic, MonteCarlo };

struct CoherenceCurve {
  std::vector<double> tau;
  std::vector<double> chi;
  std::vector<double> coherence;    // W
  std::vector<double> uncertainty;  // standard error of W, 0 for analytic
  Method method = Method::Analytic;

  std::size_t size() const { return tau.size(); }
  // (1 - W)/2, the population left in the bright state.
  std::vector<double> contrast_loss() const;
};

// Parallel over tau points (OpenMP); identical output to the serial form.
CoherenceCurve coherence_curve(const pulse::PulseSequence& seq,
                               std::span<const double> taus,
                               const noise::NoiseSpectrum& spectrum,
                               const ChiOptions& options = {});
CoherenceCurve coherence_curve_serial(const pulse::PulseSequence& seq,
                                      std::span<const double> taus,
                                      const noise::NoiseSpectrum& spectrum,
                                      const ChiOptions& options = {});

// First W = 1/e crossing by linear interpolation; NoCrossing otherwise.
double coherence_time(const CoherenceCurve& curve);

// CSV columns tau,chi,W,half_one_minus_W,uncertainty. A non-empty
// `comment` is written first as a '#' line.
void write_curve_csv(std::ostream& out, const CoherenceCurve& curve,
                     const std::string& comment = {});

// Columns omega,omega_tau,F.
void write_filter_csv(std::ostream& out, const pulse::PulseSequence& seq,
                      double tau, std::span<const double> omegas);

std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double a, double b, std::size_t n);

}  // namespace dephase::filter
