#include "dephase/rb.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <random>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/fitting.hpp"
#include "dephase/rng.hpp"

namespace dephase::rb {

using constants::pi;
using pulse::Axis;

namespace {

Mat3 axis_angle(const Vec3& n, double angle) {
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  const double x = n[0], y = n[1], z = n[2];
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

Vec3 unit_axis(Axis a) {
  return a == Axis::X ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
}

Axis draw_axis(Engine& e) { return (e() >> 63) == 0 ? Axis::X : Axis::Y; }

// Rotation sending the ideal end state (a pole of the Bloch sphere) to -z.
GateSpec inversion_for(const Vec3& r) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (std::abs(r[i]) > std::abs(r[k])) k = i;
  }
  const bool positive = r[k] > 0.0;
  GateSpec g{GateKind::Inversion, Axis::X, 0.0};
  switch (k) {
    case 2:
      g.angle = positive ? pi : 0.0;
      break;
    case 1:
      g.angle = positive ? 1.5 * pi : 0.5 * pi;
      break;
    default:
      g.axis = Axis::Y;
      g.angle = positive ? 0.5 * pi : 1.5 * pi;
      break;
  }
  return g;
}

std::uint64_t pair_seed(std::uint64_t seed, std::size_t l, std::size_t run) {
  return stream_seed(stream_seed(seed, l), run);
}

void validate(const Experiment& exp) {
  require(!exp.lengths.empty(), "at least one sequence length is required");
  for (std::size_t l : exp.lengths) require(l >= 1, "sequence lengths must be >= 1");
  require(exp.runs >= 1, "randomizations per length must be >= 1");
  require(exp.errors.depolarizing >= 0.0 && exp.errors.depolarizing <= 0.5,
          "depolarizing probability must lie in [0, 0.5]");
  require(std::isfinite(exp.errors.over_rotation),
          "over-rotation must be finite");
  require(exp.errors.detuning_rms >= 0.0, "detuning rms must be >= 0");
  require(exp.gap >= 0.0, "gate gap must be >= 0");
  require(exp.pi_time > 0.0, "pi time must be positive");
}

double one_run(const Experiment& exp, std::size_t l, std::size_t run) {
  const std::uint64_t seed = pair_seed(exp.seed, l, run);
  const auto gates = generate_sequence(l, seed);
  Engine noise = make_engine(derive_seed(seed, "errors"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double beta = exp.errors.detuning_rms * gauss(noise);
  const double rabi = pi / exp.pi_time;
  const double scale = 1.0 + exp.errors.over_rotation / pi;
  const double shrink = 1.0 - 2.0 * exp.errors.depolarizing;

  Vec3 r{0.0, 0.0, 1.0};
  for (const auto& g : gates) {
    if (beta != 0.0 && exp.gap > 0.0) {
      r = rotate(axis_angle({0.0, 0.0, 1.0}, beta * exp.gap), r);
    }
    const double angle = g.angle * scale;
    if (angle != 0.0) {
      if (beta == 0.0) {
        r = rotate(rotation(g.axis, angle), r);
      } else {
        const Vec3 a = unit_axis(g.axis);
        const double eff = std::hypot(rabi, beta);
        const Vec3 n{a[0] * rabi / eff, a[1] * rabi / eff, beta / eff};
        r = rotate(axis_angle(n, eff * angle / rabi), r);
      }
    }
    if (g.kind == GateKind::Clifford) {
      for (auto& c : r) c *= shrink;
    }
  }
  const double p_down = std::clamp(0.5 * (1.0 - r[2]), 0.0, 1.0);
  if (exp.measurements == 0) return p_down;
  Engine meas = make_engine(derive_seed(seed, "measurement"));
  std::binomial_distribution<std::size_t> draw(exp.measurements, p_down);
  return static_cast<double>(draw(meas)) /
         static_cast<double>(exp.measurements);
}

Data collect(const Experiment& exp, bool parallel) {
  validate(exp);
  Data d;
  d.lengths = exp.lengths;
  const std::size_t nl = exp.lengths.size();
  d.fidelity.assign(nl, std::vector<double>(exp.runs, 0.0));
  const auto total = static_cast<std::ptrdiff_t>(nl * exp.runs);
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < total; ++i) {
      const auto li = static_cast<std::size_t>(i) / exp.runs;
      const auto k = static_cast<std::size_t>(i) % exp.runs;
      d.fidelity[li][k] = one_run(exp, exp.lengths[li], k);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < total; ++i) {
      const auto li = static_cast<std::size_t>(i) / exp.runs;
      const auto k = static_cast<std::size_t>(i) % exp.runs;
      d.fidelity[li][k] = one_run(exp, exp.lengths[li], k);
    }
  }
  for (const auto& f : d.fidelity) {
    const double n = static_cast<double>(f.size());
    double m = 0.0;
    for (double x : f) m += x;
    m /= n;
    double v = 0.0;
    for (double x : f) v += (x - m) * (x - m);
    d.mean.push_back(m);
    d.sem.push_back(f.size() > 1 ? std::sqrt(v / (n - 1.0) / n) : 0.0);
  }
  return d;
}

}  // namespace

Mat3 rotation(Axis axis, double angle) {
  return axis_angle(unit_axis(axis), angle);
}

Vec3 rotate(const Mat3& m, const Vec3& v) {
  Vec3 out{};
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  }
  return out;
}

Mat3 compose(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return out;
}

Mat3 ideal_rotation(std::span<const GateSpec> gates) {
  Mat3 m = rotation(Axis::X, 0.0);
  for (const auto& g : gates) m = compose(rotation(g.axis, g.angle), m);
  return m;
}

std::vector<GateSpec> generate_sequence(std::size_t l, std::uint64_t seed) {
  require(l >= 1, "sequence length must be >= 1");
  Engine e = make_engine(seed);
  std::vector<GateSpec> gates;
  gates.reserve(2 * l + 1);
  for (std::size_t i = 0; i < l; ++i) {
    gates.push_back({GateKind::Pauli, draw_axis(e), pi});
    gates.push_back({GateKind::Clifford, draw_axis(e), 0.5 * pi});
  }
  const Vec3 end = rotate(ideal_rotation(gates), {0.0, 0.0, 1.0});
  gates.push_back(inversion_for(end));
  return gates;
}

Data run_experiment(const Experiment& exp) { return collect(exp, true); }
Data run_experiment_serial(const Experiment& exp) { return collect(exp, false); }

Fit fit_decay(const Data& data) {
  const std::size_t n = data.lengths.size();
  require(n == data.mean.size() && n == data.sem.size(),
          "benchmark data arrays have inconsistent lengths");
  if (n < 3) fail(ErrorKind::FitFailure, "need at least 3 sequence lengths");
  std::vector<double> x(n), y(data.mean), sigma(n);
  double min_sem = std::numeric_limits<double>::infinity();
  for (double s : data.sem) {
    if (s > 0.0) min_sem = std::min(min_sem, s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(data.lengths[i]);
    sigma[i] = std::isfinite(min_sem) ? std::max(data.sem[i], min_sem) : 1.0;
  }
  // log-linear start on the points still above the asymptote
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - 0.5;
    if (d <= 1e-6) continue;
    const double v = std::log(d);
    sx += x[i];
    sy += v;
    sxx += x[i] * x[i];
    sxy += x[i] * v;
    cnt += 1.0;
  }
  const double det = cnt * sxx - sx * sx;
  if (cnt < 2.0 || !(det > 0.0)) {
    fail(ErrorKind::FitFailure, "fidelity decay is not resolved");
  }
  const double slope = (cnt * sxy - sx * sy) / det;
  if (!(slope < 0.0)) {
    fail(ErrorKind::FitFailure,
         "fidelity does not decay with sequence length");
  }
  const double a0 = std::exp((sy - slope * sx) / cnt);
  const double q0 = std::exp(slope);
  const fit::Model model = [](double l, std::span<const double> p) {
    return 0.5 + p[0] * std::pow(p[1], l);
  };
  const auto r = fit::least_squares(model, x, y, sigma, {a0, q0});
  const double pg = 0.5 * (1.0 - r.params[1]);
  if (!r.converged || !std::isfinite(pg) || !(pg > 0.0)) {
    fail(ErrorKind::FitFailure, "exponential fit did not resolve a decay");
  }
  return {pg, 0.5 * r.errors[1], r.params[0], r.reduced_chi2()};
}

Result simulate(const Experiment& exp) {
  Result r;
  r.data = run_experiment(exp);
  r.fit = fit_decay(r.data);
  return r;
}

double timing_infidelity(double pi_time, double resolution) {
  require(pi_time > 0.0, "pi time must be positive");
  require(resolution >= 0.0, "timing resolution must be >= 0");
  const double s = std::sin(0.5 * pi * resolution / pi_time);
  return s * s;
}

double timing_infidelity_linear(double pi_time, double resolution) {
  require(pi_time > 0.0, "pi time must be positive");
  require(resolution >= 0.0, "timing resolution must be >= 0");
  return resolution / pi_time;
}

void write_data_csv(std::ostream& out, const Data& data) {
  out << "l,run,fidelity\n" << std::setprecision(12);
  for (std::size_t i = 0; i < data.lengths.size(); ++i) {
    for (std::size_t k = 0; k < data.fidelity[i].size(); ++k) {
      out << data.lengths[i] << ',' << k << ',' << data.fidelity[i][k] << '\n';
    }
  }
}

}  // namespace dephase::rb
