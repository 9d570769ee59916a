#include "dephase/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/quadrature.hpp"

namespace dephase::filter {

using pulse::Edge;
using pulse::PulseSequence;
using noise::NoiseSpectrum;

namespace {

constexpr std::size_t kMaxDoublings = 40;

double mean_filter(std::span<const Edge> edges) {
  double s = 0.0;
  for (const auto& e : edges) s += e.weight * e.weight;
  return s;
}

// sum over ordered pairs m != m' of |w_m w_m'| / |t_m - t_m'|
double pair_coefficient(std::span<const Edge> edges) {
  double s = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      s += 2.0 * std::abs(edges[i].weight * edges[j].weight) /
           std::abs(edges[j].time - edges[i].time);
    }
  }
  return s;
}

// Order k0 of the first non-vanishing moment sum_m w_m t_m^k, so that
// F(w)/w^2 ~ w^(2 k0 - 2) near zero.
int low_frequency_order(std::span<const Edge> edges, double tau) {
  for (int k = 1; k < 64; ++k) {
    double m = 0.0, scale = 0.0;
    for (const auto& e : edges) {
      const double tk = std::pow(e.time / tau, k);
      m += e.weight * tk;
      scale += std::abs(e.weight * tk);
    }
    if (std::abs(m) > 1e-9 * std::max(scale, 1.0)) return k;
  }
  return 64;
}

void check_integrability(std::span<const Edge> edges, double tau,
                         const NoiseSpectrum& unit) {
  const auto* law = std::get_if<noise::AmbientPowerLaw>(&unit.shape());
  if (law == nullptr) return;
  if (law->low_cutoff == 0.0 && law->exponent > 0.0) {
    const int k0 = low_frequency_order(edges, tau);
    if (!(2.0 * k0 - 2.0 - law->exponent > -1.0)) {
      fail(ErrorKind::DivergentIntegrand,
           "power law w^-" + std::to_string(law->exponent) +
               " without low cutoff diverges against a filter of order w^" +
               std::to_string(2 * k0));
    }
  }
  if (!std::isfinite(law->high_cutoff) && law->exponent <= -1.0) {
    fail(ErrorKind::DivergentIntegrand,
         "power law with exponent <= -1 needs a high cutoff");
  }
}

std::vector<double> panel_breaks(double lo, double hi, double step,
                                 const std::vector<double>& extra,
                                 std::size_t max_count) {
  const double span = hi - lo;
  if (span / step > static_cast<double>(max_count)) {
    step = span / static_cast<double>(max_count);
  }
  std::vector<double> b;
  const auto count = static_cast<std::size_t>(std::ceil(span / step));
  b.reserve(count + extra.size() + 2);
  for (std::size_t i = 0; i < count; ++i) {
    b.push_back(lo + step * static_cast<double>(i));
  }
  b.push_back(hi);
  for (double x : extra) {
    if (x > lo && x < hi) b.push_back(x);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

// Integral_Omega^inf S(w)/w^2 dw through w = Omega/u.
double tail_integral(const NoiseSpectrum& unit, double omega_cut) {
  std::vector<double> breaks{0.0};
  for (double bp : unit.breakpoints()) {
    if (bp > omega_cut) breaks.push_back(omega_cut / bp);
  }
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  quad::Options opt;
  opt.rel_tol = 1e-10;
  return quad::integrate(
             [&](double u) {
               return u > 0.0 ? unit.shape_value(omega_cut / u) / omega_cut
                              : 0.0;
             },
             breaks, opt)
      .value;
}

struct Integrand {
  const NoiseSpectrum& unit;
  std::span<const Edge> edges;
  double floor;
  double operator()(double w) const {
    const double s = unit.shape_value(w);
    if (s == 0.0) return 0.0;
    return s * filter_over_omega_sq(edges, w, floor);
  }
};

}  // namespace

double ramsey_filter(double omega_tau) {
  require(omega_tau >= 0.0, "omega*tau must be non-negative");
  const double s = std::sin(0.5 * omega_tau);
  return 4.0 * s * s;
}

double dd_filter(const PulseSequence& seq, double tau, double omega) {
  pulse::realize(seq, tau);
  const double x = omega * tau;
  const std::size_t n = seq.size();
  std::complex<double> sum =
      1.0 + ((n + 1) % 2 == 0 ? 1.0 : -1.0) * std::polar(1.0, x);
  const double c = std::cos(0.5 * omega * seq.pulse_width());
  for (std::size_t j = 1; j <= n; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    sum += 2.0 * sign * c * std::polar(1.0, seq.positions()[j - 1] * x);
  }
  return std::norm(sum);
}

double filter_over_omega_sq(std::span<const Edge> edges, double omega,
                            double omega_floor) {
  if (omega < omega_floor) {
    double m1 = 0.0;
    for (const auto& e : edges) m1 += e.weight * e.time;
    return m1 * m1;
  }
  // sum_m w_m (e^{i w t_m} - 1) / w with e^{i x} - 1 = 2 i sin(x/2) e^{i x/2}
  double re = 0.0, im = 0.0;
  const double inv = 2.0 / omega;
  for (const auto& e : edges) {
    const double half = 0.5 * omega * e.time;
    const double s = std::sin(half);
    const double c = std::cos(half);
    const double f = e.weight * s * inv;
    re += f * c;
    im += f * s;
  }
  return re * re + im * im;
}

ChiResult chi_shape(const PulseSequence& seq, double tau,
                    const NoiseSpectrum& spectrum, const ChiOptions& options) {
  require(std::isfinite(tau) && tau > 0.0, "duration must be positive");
  require(options.rel_tol > 0.0, "tolerance must be positive");
  const auto edges = pulse::filter_edges(seq, tau);
  const NoiseSpectrum unit = spectrum.with_strength(1.0);
  check_integrability(edges, tau, unit);

  const double period = constants::two_pi / tau;
  const Integrand g{unit, edges, options.omega_floor_factor * period};
  const double support = unit.support_limit();
  std::vector<double> bps;
  for (double b : unit.breakpoints()) {
    if (b < support) bps.push_back(b);
  }
  const std::size_t max_initial = options.max_panels / 4;

  quad::Options qopt;
  qopt.rel_tol = 0.5 * options.rel_tol;
  qopt.max_panels = options.max_panels;

  ChiResult r;
  const bool bounded = std::isfinite(support);
  double cut = bounded ? support
                       : std::max(64.0 * period,
                                  bps.empty() ? 0.0 : 1.5 * bps.back());
  auto core = quad::integrate(
      g, panel_breaks(0.0, cut, 0.5 * period, bps, max_initial), qopt);
  r.evaluations = core.evaluations;
  bool converged = core.converged;
  double value = core.value;
  double error = core.error;

  if (!bounded) {
    const double fbar = mean_filter(edges);
    const double pairs = pair_coefficient(edges);
    std::size_t doublings = 0;
    while (true) {
      const double tail = fbar * tail_integral(unit, cut);
      const double bound = 2.0 * unit.shape_value(cut) / (cut * cut) * pairs;
      const double total = value + tail;
      if (bound <= 0.25 * options.rel_tol * std::abs(total) || total == 0.0) {
        value = total;
        error += bound;
        break;
      }
      if (++doublings > kMaxDoublings) {
        fail(ErrorKind::NonConvergent,
             "tail truncation did not converge; remainder bound " +
                 std::to_string(bound) + " vs total " + std::to_string(total));
      }
      auto more = quad::integrate(
          g, panel_breaks(cut, 2.0 * cut, 0.5 * period, bps, max_initial),
          qopt);
      value += more.value;
      error += more.error;
      r.evaluations += more.evaluations;
      converged = converged && more.converged;
      cut *= 2.0;
    }
  }
  if (!converged) {
    fail(ErrorKind::NonConvergent,
         "quadrature reached the panel limit; achieved error " +
             std::to_string(error) + " on " + std::to_string(value));
  }
  const double scale = 2.0 / constants::pi;
  r.chi = scale * value;
  r.error = scale * error;
  r.cutoff = cut;
  return r;
}

ChiResult chi(const PulseSequence& seq, double tau,
              const NoiseSpectrum& spectrum, const ChiOptions& options) {
  ChiResult r = chi_shape(seq, tau, spectrum, options);
  const double alpha = spectrum.strength();
  r.chi *= alpha;
  r.error *= alpha;
  return r;
}

FixedPartition chi_partition(const PulseSequence& seq, double tau,
                             const NoiseSpectrum& spectrum,
                             const ChiOptions& options) {
  const ChiResult ref = chi_shape(seq, tau, spectrum, options);
  const auto edges = pulse::filter_edges(seq, tau);
  const NoiseSpectrum unit = spectrum.with_strength(1.0);
  const double period = constants::two_pi / tau;
  const Integrand g{unit, edges, options.omega_floor_factor * period};
  std::vector<double> bps;
  for (double b : unit.breakpoints()) {
    if (b < ref.cutoff) bps.push_back(b);
  }
  quad::Options qopt;
  qopt.rel_tol = 0.5 * options.rel_tol;
  qopt.max_panels = options.max_panels;
  std::vector<double> adaptive;
  quad::integrate(g,
                  panel_breaks(0.0, ref.cutoff, 0.5 * period, bps,
                               options.max_panels / 4),
                  qopt, &adaptive);
  FixedPartition part;
  // one extra bisection so nearby pulse placements stay resolved
  for (std::size_t i = 0; i + 1 < adaptive.size(); ++i) {
    part.breaks.push_back(adaptive[i]);
    part.breaks.push_back(0.5 * (adaptive[i] + adaptive[i + 1]));
  }
  part.breaks.push_back(adaptive.back());
  part.has_tail = !std::isfinite(unit.support_limit());
  if (part.has_tail) part.tail = tail_integral(unit, part.breaks.back());
  return part;
}

std::pair<double, double> chi_fixed(std::span<const Edge> edges, double tau,
                                    const NoiseSpectrum& spectrum,
                                    const FixedPartition& partition) {
  const double alpha = spectrum.strength();
  if (alpha == 0.0) return {0.0, 0.0};
  const NoiseSpectrum unit = spectrum.with_strength(1.0);
  const Integrand g{unit, edges, ChiOptions{}.omega_floor_factor *
                                     constants::two_pi / tau};
  double value = quad::integrate_fixed(g, partition.breaks);
  double bound = 0.0;
  if (partition.has_tail) {
    const double cut = partition.breaks.back();
    value += mean_filter(edges) * partition.tail;
    bound = 2.0 * unit.shape_value(cut) / (cut * cut) * pair_coefficient(edges);
  }
  const double scale = 2.0 / constants::pi * alpha;
  return {scale * value, scale * bound};
}

std::vector<double> CoherenceCurve::contrast_loss() const {
  std::vector<double> out(coherence.size());
  for (std::size_t i = 0; i < coherence.size(); ++i) {
    out[i] = 0.5 * (1.0 - coherence[i]);
  }
  return out;
}

namespace {

void check_grid(std::span<const double> taus) {
  require(!taus.empty(), "tau grid is empty");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(std::isfinite(taus[i]) && taus[i] > 0.0,
            "tau grid values must be positive");
    if (i > 0) require(taus[i] > taus[i - 1], "tau grid must be ascending");
  }
}

CoherenceCurve make_curve(std::span<const double> taus) {
  CoherenceCurve c;
  c.tau.assign(taus.begin(), taus.end());
  c.chi.assign(taus.size(), 0.0);
  c.coherence.assign(taus.size(), 1.0);
  c.uncertainty.assign(taus.size(), 0.0);
  c.method = Method::Analytic;
  return c;
}

}  // namespace

CoherenceCurve coherence_curve(const PulseSequence& seq,
                               std::span<const double> taus,
                               const NoiseSpectrum& spectrum,
                               const ChiOptions& options) {
  check_grid(taus);
  CoherenceCurve c = make_curve(taus);
  const auto n = static_cast<std::ptrdiff_t>(taus.size());
  std::vector<std::exception_ptr> errors(taus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const double x = chi(seq, taus[i], spectrum, options).chi;
      c.chi[i] = x;
      c.coherence[i] = std::exp(-x);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return c;
}

CoherenceCurve coherence_curve_serial(const PulseSequence& seq,
                                      std::span<const double> taus,
                                      const NoiseSpectrum& spectrum,
                                      const ChiOptions& options) {
  check_grid(taus);
  CoherenceCurve c = make_curve(taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double x = chi(seq, taus[i], spectrum, options).chi;
    c.chi[i] = x;
    c.coherence[i] = std::exp(-x);
  }
  return c;
}

double coherence_time(const CoherenceCurve& curve) {
  const double level = std::exp(-1.0);
  const auto& w = curve.coherence;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i] >= level && w[i + 1] <= level && w[i] != w[i + 1]) {
      const double f = (w[i] - level) / (w[i] - w[i + 1]);
      return curve.tau[i] + f * (curve.tau[i + 1] - curve.tau[i]);
    }
    if (w[i] == level) return curve.tau[i];
  }
  fail(ErrorKind::NoCrossing, "coherence never crosses 1/e on the grid");
}

void write_curve_csv(std::ostream& out, const CoherenceCurve& curve,
                     const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "tau,chi,W,half_one_minus_W,uncertainty\n";
  out << std::setprecision(12);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve.tau[i] << ',' << curve.chi[i] << ',' << curve.coherence[i]
        << ',' << 0.5 * (1.0 - curve.coherence[i]) << ','
        << curve.uncertainty[i] << '\n';
  }
}

void write_filter_csv(std::ostream& out, const PulseSequence& seq, double tau,
                      std::span<const double> omegas) {
  out << "omega,omega_tau,F\n";
  out << std::setprecision(12);
  for (double w : omegas) {
    out << w << ',' << w * tau << ',' << dd_filter(seq, tau, w) << '\n';
  }
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? a
                  : a + (b - a) * static_cast<double>(i) /
                            static_cast<double>(n - 1);
  }
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  require(a > 0.0 && b > 0.0, "logspace bounds must be positive");
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (auto& x : v) x = std::exp(x);
  if (n > 1) {
    v.front() = a;
    v.back() = b;
  }
  return v;
}

}  // namespace dephase::filter
