#include "dephase/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"

namespace dephase::pulse {

namespace {

constexpr double kOverlapSlack = 1e-12;

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

PulseSequence::PulseSequence(std::vector<double> positions, double pulse_width,
                             std::vector<Axis> axes)
    : positions_(std::move(positions)),
      pulse_width_(pulse_width),
      axes_(std::move(axes)) {
  require(std::isfinite(pulse_width_) && pulse_width_ >= 0.0,
          "pulse width must be non-negative");
  for (std::size_t j = 0; j < positions_.size(); ++j) {
    const double d = positions_[j];
    if (!(d > 0.0 && d < 1.0)) {
      fail(ErrorKind::OrderingViolation,
           "pulse " + std::to_string(j + 1) + " position " + fmt12(d) +
               " outside (0, 1)");
    }
    if (j > 0 && !(d > positions_[j - 1])) {
      fail(ErrorKind::OrderingViolation,
           "pulses " + std::to_string(j) + " and " + std::to_string(j + 1) +
               " are not strictly increasing");
    }
  }
  if (axes_.empty()) {
    axes_.assign(positions_.size(), Axis::X);
  }
  require(axes_.size() == positions_.size(),
          "axis list must match the number of pulses");
}

PulseSequence PulseSequence::with_pulse_width(double width) const {
  return PulseSequence(positions_, width, axes_);
}

PulseSequence ramsey() { return PulseSequence(); }

PulseSequence cpmg(std::size_t n, double pulse_width) {
  require(n >= 1, "CPMG needs at least one pulse");
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
  }
  return PulseSequence(std::move(d), pulse_width,
                       std::vector<Axis>(n, Axis::Y));
}

PulseSequence udd(std::size_t n, double pulse_width) {
  require(n >= 1, "UDD needs at least one pulse");
  std::vector<double> d(n);
  const double denom = 2.0 * static_cast<double>(n) + 2.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double s = std::sin(constants::pi * static_cast<double>(j) / denom);
    d[j - 1] = s * s;
  }
  return PulseSequence(std::move(d), pulse_width);
}

PulseSequence custom(std::vector<double> positions, double pulse_width) {
  return PulseSequence(std::move(positions), pulse_width);
}

bool fits(const PulseSequence& seq, double tau) {
  try {
    realize(seq, tau);
    return true;
  } catch (const Error&) {
    return false;
  }
}

TimedSequence::TimedSequence(std::vector<Interval> intervals, double duration)
    : intervals_(std::move(intervals)), duration_(duration) {}

double TimedSequence::value_at(double t) const {
  if (t < 0.0 || t > duration_) return 0.0;
  for (auto it = intervals_.rbegin(); it != intervals_.rend(); ++it) {
    if (t >= it->start) return it->sign;
  }
  return 0.0;
}

double TimedSequence::integral(double a, double b) const {
  double sum = 0.0;
  for (const auto& iv : intervals_) {
    if (iv.sign == 0) continue;
    const double lo = std::max(a, iv.start);
    const double hi = std::min(b, iv.end);
    if (hi > lo) sum += iv.sign * (hi - lo);
  }
  return sum;
}

TimedSequence realize(const PulseSequence& seq, double tau) {
  require(std::isfinite(tau) && tau > 0.0, "duration must be positive");
  const double w = seq.pulse_width();
  const double half = 0.5 * w;
  const double slack = kOverlapSlack * tau;
  const auto& d = seq.positions();
  const std::size_t n = d.size();
  if (n > 0 && d.front() * tau - half < -slack) {
    fail(ErrorKind::OverlapViolation,
         "pulse 1 starts before t = 0 at tau = " + fmt12(tau));
  }
  for (std::size_t j = 1; j < n; ++j) {
    if ((d[j] - d[j - 1]) * tau - w < -slack) {
      fail(ErrorKind::OverlapViolation,
           "pulses " + std::to_string(j) + " and " + std::to_string(j + 1) +
               " overlap at tau = " + fmt12(tau));
    }
  }
  if (n > 0 && (1.0 - d.back()) * tau - half < -slack) {
    fail(ErrorKind::OverlapViolation,
         "pulse " + std::to_string(n) + " ends after tau = " + fmt12(tau));
  }

  std::vector<Interval> out;
  double cursor = 0.0;
  int sign = 1;
  for (std::size_t j = 0; j < n; ++j) {
    const double center = d[j] * tau;
    const double start = std::clamp(center - half, cursor, tau);
    const double end = std::clamp(center + half, start, tau);
    out.push_back({cursor, start, false, sign});
    if (w > 0.0) out.push_back({start, end, true, 0});
    cursor = end;
    sign = -sign;
  }
  out.push_back({cursor, tau, false, sign});
  return TimedSequence(std::move(out), tau);
}

TimedSequence time_domain_filter(const PulseSequence& seq, double tau) {
  return realize(seq, tau);
}

std::vector<Edge> filter_edges(const PulseSequence& seq, double tau) {
  realize(seq, tau);  // validates spacing
  const double half = 0.5 * seq.pulse_width();
  const auto& d = seq.positions();
  const std::size_t n = d.size();
  std::vector<Edge> raw;
  raw.reserve(2 * n + 2);
  raw.push_back({0.0, -1.0});
  for (std::size_t j = 0; j < n; ++j) {
    // both edges of pulse j+1 carry weight (-1)^j
    const double wgt = (j % 2 == 0) ? 1.0 : -1.0;
    raw.push_back({d[j] * tau - half, wgt});
    raw.push_back({d[j] * tau + half, wgt});
  }
  raw.push_back({tau, (n % 2 == 0) ? 1.0 : -1.0});
  std::vector<Edge> merged;
  const double eps = 1e-15 * tau;
  for (const auto& e : raw) {
    if (!merged.empty() && std::abs(e.time - merged.back().time) <= eps) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const Edge& e) { return e.weight == 0.0; });
  return merged;
}

std::string to_record(const PulseSequence& seq) {
  std::string out = std::to_string(seq.size()) + "," + fmt12(seq.pulse_width());
  for (double d : seq.positions()) out += "," + fmt12(d);
  return out;
}

PulseSequence from_record(const std::string& record) {
  std::vector<double> fields;
  std::stringstream ss(record);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      fields.push_back(std::stod(tok, &used));
      require(tok.find_first_not_of(" \t\r\n", used) == std::string::npos,
              "trailing characters in sequence record field '" + tok + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::InvalidArgument, "bad sequence record field '" + tok + "'");
    }
  }
  require(fields.size() >= 2, "sequence record needs n and tau_pi");
  const double n = fields[0];
  require(n >= 0.0 && n == std::floor(n) &&
              static_cast<std::size_t>(n) + 2 == fields.size(),
          "sequence record pulse count does not match its positions");
  return PulseSequence(std::vector<double>(fields.begin() + 2, fields.end()),
                       fields[1]);
}

}  // namespace dephase::pulse
