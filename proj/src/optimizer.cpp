#include "dephase/optimizer.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include "dephase/error.hpp"
#include "dephase/rng.hpp"

namespace dephase::opt {

using pulse::PulseSequence;

namespace {

constexpr int kBrentBits = 40;
constexpr double kAcceptFloor = 1e-13;  // relative, below quadrature noise
constexpr double kPressed = 1e-9;
constexpr double kMinClearance = 1e-9;  // keeps zero-width pulses distinct

struct Geometry {
  std::size_t n;
  double width;  // s
  double half;   // first/last clearance, fraction of tau
  double gap;    // minimum centre spacing, fraction of tau

  double lower(const std::vector<double>& d, std::size_t j) const {
    return j == 0 ? half : d[j - 1] + gap;
  }
  double upper(const std::vector<double>& d, std::size_t j) const {
    return j + 1 == n ? 1.0 - half : d[j + 1] - gap;
  }
  // Constraint slacks, all >= 0 when feasible.
  std::vector<double> slacks(const std::vector<double>& d) const {
    std::vector<double> s;
    s.push_back(d.front() - half);
    for (std::size_t j = 1; j < n; ++j) s.push_back(d[j] - d[j - 1] - gap);
    s.push_back(1.0 - half - d.back());
    return s;
  }
};

struct Local {
  std::vector<double> d;
  double chi = 0.0;  // full tolerance
  double chi_error = 0.0;
  std::vector<double> trace;
  std::size_t iterations = 0;
  bool converged = false;
};

class Objective {
 public:
  Objective(const Problem& p, const Geometry& g, const std::vector<double>& start)
      : p_(p), g_(g) {
    part_ = filter::chi_partition(PulseSequence(start, g.width), p.tau,
                                  p.spectrum);
  }
  double operator()(const std::vector<double>& d) const {
    const auto edges = pulse::filter_edges(PulseSequence(d, g_.width), p_.tau);
    return filter::chi_fixed(edges, p_.tau, p_.spectrum, part_).first;
  }

 private:
  const Problem& p_;
  const Geometry& g_;
  filter::FixedPartition part_;
};

bool better(double candidate, double current) {
  return candidate < current - kAcceptFloor * std::abs(current);
}

bool is_symmetric(const std::vector<double>& d) {
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (std::abs(d[j] + d[d.size() - 1 - j] - 1.0) > 1e-12) return false;
  }
  return true;
}

// With `mirror`, coordinate j moves the pair (j, n-1-j) together, which keeps
// the sequence symmetric under time reversal.
Local local_search(const Problem& p, const Geometry& g, std::vector<double> d,
                   bool mirror) {
  const Objective f(p, g, d);
  const std::size_t coords = mirror ? g.n / 2 : g.n;
  auto set = [&](std::vector<double>& v, std::size_t j, double x) {
    v[j] = x;
    if (mirror) v[g.n - 1 - j] = 1.0 - x;
  };
  Local out;
  double fd = f(d);
  out.trace.push_back(fd);
  for (; out.iterations < p.max_iterations; ++out.iterations) {
    const std::vector<double> old = d;
    const double f_old = fd;
    for (std::size_t j = 0; j < coords; ++j) {
      const double lo = g.lower(d, j);
      const double hi = mirror && j + 2 == g.n - j ? 0.5 * (1.0 - g.gap)
                                                   : g.upper(d, j);
      if (!(hi > lo)) continue;
      std::vector<double> trial = d;
      auto line = [&](double x) {
        set(trial, j, x);
        return f(trial);
      };
      const auto [x, fx] =
          boost::math::tools::brent_find_minima(line, lo, hi, kBrentBits);
      if (better(fx, fd)) {
        set(d, j, x);
        fd = fx;
      }
    }
    // extrapolate along the sweep's net move
    std::vector<double> dir(g.n);
    for (std::size_t j = 0; j < g.n; ++j) dir[j] = d[j] - old[j];
    if (std::any_of(dir.begin(), dir.end(), [](double v) { return v != 0.0; })) {
      const auto s0 = g.slacks(old);
      std::vector<double> ds(s0.size());
      ds.front() = dir.front();
      for (std::size_t j = 1; j < g.n; ++j) ds[j] = dir[j] - dir[j - 1];
      ds.back() = -dir.back();
      double t_max = 4.0;
      for (std::size_t k = 0; k < s0.size(); ++k) {
        if (ds[k] < 0.0) t_max = std::min(t_max, -std::max(s0[k], 0.0) / ds[k]);
      }
      if (t_max > 1.0) {
        std::vector<double> trial(g.n);
        auto line = [&](double t) {
          for (std::size_t j = 0; j < g.n; ++j) trial[j] = old[j] + t * dir[j];
          return f(trial);
        };
        const auto [t, ft] =
            boost::math::tools::brent_find_minima(line, 1.0, t_max, kBrentBits);
        if (better(ft, fd)) {
          for (std::size_t j = 0; j < g.n; ++j) d[j] = old[j] + t * dir[j];
          fd = ft;
        }
      }
    }
    out.trace.push_back(fd);
    if (f_old - fd <= p.tolerance * std::abs(f_old)) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }
  out.d = std::move(d);
  const auto full = filter::chi(PulseSequence(out.d, g.width), p.tau, p.spectrum);
  out.chi = full.chi;
  out.chi_error = full.error;
  return out;
}

// A symmetric start is refined inside the symmetric subspace first; chi is
// invariant under time reversal, so a stationary point there is stationary
// overall. An unrestricted pass then keeps a symmetry-breaking move only if
// it gains more than the tolerance.
Local search(const Problem& p, const Geometry& g, const std::vector<double>& d) {
  if (g.n < 2 || !is_symmetric(d)) return local_search(p, g, d, false);
  Local sym = local_search(p, g, d, true);
  Local free = local_search(p, g, sym.d, false);
  if (free.chi < sym.chi - p.tolerance * std::abs(sym.chi)) {
    sym.trace.insert(sym.trace.end(), free.trace.begin() + 1, free.trace.end());
    sym.iterations += free.iterations;
    sym.d = std::move(free.d);
    sym.chi = free.chi;
    sym.chi_error = free.chi_error;
    sym.converged = free.converged;
  }
  return sym;
}

std::vector<double> random_start(const Geometry& g, std::uint64_t seed) {
  const double free = 1.0 - 2.0 * g.half - static_cast<double>(g.n - 1) * g.gap;
  Engine e = make_engine(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> u(g.n + 1);
  double sum = 0.0;
  for (auto& x : u) sum += (x = expo(e));
  std::vector<double> d(g.n);
  double pos = g.half;
  for (std::size_t j = 0; j < g.n; ++j) {
    pos += free * u[j] / sum + (j == 0 ? 0.0 : g.gap);
    d[j] = pos;
  }
  return d;
}

Result run(const Problem& p, bool parallel) {
  require(p.n >= 1, "pulse count must be >= 1");
  require(std::isfinite(p.tau) && p.tau > 0.0, "duration must be positive");
  require(p.pulse_width >= 0.0, "pulse width must be >= 0");
  require(p.margin >= 0.0, "margin must be >= 0");
  require(p.tolerance > 0.0, "tolerance must be positive");
  require(p.max_iterations >= 1, "iteration cap must be >= 1");
  const Geometry g{
      p.n, p.pulse_width,
      std::max(0.5 * p.pulse_width / p.tau + p.margin, kMinClearance),
      std::max(p.pulse_width / p.tau + p.margin, kMinClearance)};

  const PulseSequence start =
      p.start ? p.start->with_pulse_width(p.pulse_width)
              : pulse::udd(p.n, p.pulse_width);
  if (start.size() != p.n) {
    fail(ErrorKind::InfeasibleStart, "start sequence has " +
                                         std::to_string(start.size()) +
                                         " pulses, expected " +
                                         std::to_string(p.n));
  }
  if (!pulse::fits(start, p.tau)) {
    fail(ErrorKind::InfeasibleStart,
         "start sequence does not fit in tau with the given pulse width");
  }
  const auto s = g.slacks(start.positions());
  if (*std::min_element(s.begin(), s.end()) < -1e-12) {
    fail(ErrorKind::InfeasibleStart, "start sequence violates the margins");
  }

  std::vector<std::vector<double>> starts{start.positions()};
  for (std::size_t r = 0; r < p.restarts; ++r) {
    starts.push_back(random_start(g, stream_seed(p.seed, r)));
  }
  std::vector<Local> results(starts.size());
  std::vector<std::exception_ptr> errors(starts.size());
  const auto count = static_cast<std::ptrdiff_t>(starts.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      results[i] = search(p, g, starts[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const auto& a = results[i];
    const auto& b = results[best];
    if (a.chi < b.chi || (a.chi == b.chi && a.d < b.d)) best = i;
  }

  Result out;
  const auto start_full = filter::chi(start, p.tau, p.spectrum);
  out.start_chi = start_full.chi;
  const Local& w = results[best];
  out.chi_trace = w.trace;
  out.iterations = w.iterations;
  out.converged = w.converged;
  // a move must beat the start by more than the quadrature can resolve
  if (w.chi < out.start_chi - (w.chi_error + start_full.error)) {
    out.sequence = PulseSequence(w.d, p.pulse_width);
    out.chi = w.chi;
    const auto sl = g.slacks(w.d);
    out.stalled_at_constraint =
        *std::min_element(sl.begin(), sl.end()) < 2.0 * kPressed;
  } else {
    out.sequence = start;
    out.chi = out.start_chi;
  }
  return out;
}

}  // namespace

Result optimize(const Problem& problem) { return run(problem, true); }
Result optimize_serial(const Problem& problem) { return run(problem, false); }

}  // namespace dephase::opt
