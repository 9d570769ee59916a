#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dephase/pulse.hpp"

namespace dephase::rb {

enum class GateKind { Clifford, Pauli, Inversion };

struct GateSpec {
  GateKind kind = GateKind::Clifford;
  pulse::Axis axis = pulse::Axis::X;
  double angle = 0.0;  // rad, always >= 0 (uniform rotation sign)

  bool operator==(const GateSpec&) const = default;
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Bloch-vector rotation by `angle` about the x or y axis (right-handed).
Mat3 rotation(pulse::Axis axis, double angle);
Vec3 rotate(const Mat3& m, const Vec3& v);
Mat3 compose(const Mat3& a, const Mat3& b);  // a * b

// l computational gates, each a Pauli pi followed by a Clifford pi/2 about
// uniformly drawn X/Y axes, then one rotation taking the ideal final state
// to |down> (the -z pole).
std::vector<GateSpec> generate_sequence(std::size_t l, std::uint64_t seed);

// Ideal rotation of a gate list applied in order.
Mat3 ideal_rotation(std::span<const GateSpec> gates);

struct ErrorModel {
  // Bloch vector shrinks by (1 - 2p) after each computational gate, so
  // p = 0.5 depolarizes completely. p in [0, 0.5].
  double depolarizing = 0.0;
  // Every driven rotation by theta becomes theta (1 + epsilon / pi), i.e. a
  // pi pulse over-rotates by epsilon.
  double over_rotation = 0.0;
  // rms of a quasi-static qubit detuning drawn once per run [rad/s].
  double detuning_rms = 0.0;
};

struct Experiment {
  std::vector<std::size_t> lengths;
  std::size_t runs = 20;  // k randomizations per length
  std::uint64_t seed = 0;
  ErrorModel errors;
  double gap = 5e-6;            // s between operations
  double pi_time = 232.5e-6;    // s
  // Projective measurements averaged per run (binomial); 0 reports the
  // exact ideal-outcome probability.
  std::size_t measurements = 20;
};

struct Data {
  std::vector<std::size_t> lengths;
  std::vector<std::vector<double>> fidelity;  // [length][run]
  std::vector<double> mean;
  std::vector<double> sem;  // standard error of the mean over runs
};

struct Fit {
  double error_per_gate = 0.0;  // p_g
  double ci = 0.0;              // 68 %
  double amplitude = 0.0;       // A in F = 0.5 + A (1 - 2 p_g)^l
  double reduced_chi2 = 0.0;
};

struct Result {
  Data data;
  Fit fit;
};

// Runs are parallel over (length, run) pairs; each pair draws from
// stream_seed(stream_seed(seed, l), run), so output is schedule-independent.
Data run_experiment(const Experiment& exp);
Data run_experiment_serial(const Experiment& exp);

// Weighted fit to the per-length means. Throws FitFailure when no decay is
// resolved.
Fit fit_decay(const Data& data);

Result simulate(const Experiment& exp);

// Population error of a pi pulse mistimed by one resolution step:
// sin^2((pi/2) resolution / tau_pi).
double timing_infidelity(double pi_time, double resolution);
// The linear bound resolution / tau_pi.
double timing_infidelity_linear(double pi_time, double resolution);

// CSV with header "l,run,fidelity".
void write_data_csv(std::ostream& out, const Data& data);

}  // namespace dephase::rb
