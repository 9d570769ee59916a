#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dephase::pulse {

enum class Axis { X, Y };

// n pi pulses centered at fractions delta_j of the total duration tau.
// Ramsey free precession is the n = 0 sequence.
class PulseSequence {
 public:
  PulseSequence() = default;
  // Throws OrderingViolation unless 0 < d_1 < ... < d_n < 1.
  PulseSequence(std::vector<double> positions, double pulse_width,
                std::vector<Axis> axes = {});

  std::size_t size() const { return positions_.size(); }
  const std::vector<double>& positions() const { return positions_; }
  double pulse_width() const { return pulse_width_; }
  const std::vector<Axis>& axes() const { return axes_; }

  PulseSequence with_pulse_width(double width) const;

  bool operator==(const PulseSequence&) const = default;

 private:
  std::vector<double> positions_;
  double pulse_width_ = 0.0;
  std::vector<Axis> axes_;
};

PulseSequence ramsey();
// delta_j = (j - 1/2) / n, pulses about Y (90 degrees from the initial X).
PulseSequence cpmg(std::size_t n, double pulse_width = 0.0);
// delta_j = sin^2(pi j / (2n + 2)).
PulseSequence udd(std::size_t n, double pulse_width = 0.0);
PulseSequence custom(std::vector<double> positions, double pulse_width = 0.0);

struct Interval {
  double start = 0.0;
  double end = 0.0;
  bool pulse = false;
  int sign = 0;  // y(t) on the interval: +-1 free precession, 0 during pulses

  double length() const { return end - start; }
};

// Partition of [0, tau] into free-precession and pulse intervals.
class TimedSequence {
 public:
  TimedSequence(std::vector<Interval> intervals, double duration);

  const std::vector<Interval>& intervals() const { return intervals_; }
  double duration() const { return duration_; }

  // Time-domain filter y(t). Boundaries take the value of the later interval.
  double value_at(double t) const;
  // Integral of y over [a, b].
  double integral(double a, double b) const;

 private:
  std::vector<Interval> intervals_;
  double duration_ = 0.0;
};

// Throws OverlapViolation naming the first offending pair.
TimedSequence realize(const PulseSequence& seq, double tau);
TimedSequence time_domain_filter(const PulseSequence& seq, double tau);

// Minimum spacing margins at duration tau, as fractions of tau.
bool fits(const PulseSequence& seq, double tau);

// Sign-change representation: i w Y(w) = sum_m weight_m exp(i w t_m),
// where Y is the Fourier transform of y(t).
// Coincident edges (tau_pi = 0) are merged.
struct Edge {
  double time = 0.0;
  double weight = 0.0;
};
std::vector<Edge> filter_edges(const PulseSequence& seq, double tau);

// Single-line record "n,tau_pi,d_1,...,d_n" with 12 significant digits.
std::string to_record(const PulseSequence& seq);
PulseSequence from_record(const std::string& record);

}  // namespace dephase::pulse
