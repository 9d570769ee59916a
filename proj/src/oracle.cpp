#include "dephase/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <random>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/noise.hpp"
#include "dephase/rng.hpp"

namespace dephase::oracle {

using filter::CoherenceCurve;
using noise::NoiseSpectrum;
using pulse::PulseSequence;

namespace {

constexpr std::size_t kMaxTrace = std::size_t{1} << 26;

struct Window {
  double start;
  double end;
  double sign;
};

// Free-precession windows of one sequence at one duration.
std::vector<Window> windows(const PulseSequence& seq, double tau) {
  std::vector<Window> w;
  const auto timed = pulse::realize(seq, tau);
  for (const auto& iv : timed.intervals()) {
    if (iv.sign != 0 && iv.end > iv.start) {
      w.push_back({iv.start, iv.end, static_cast<double>(iv.sign)});
    }
  }
  return w;
}

// Running integral of the zero-order-held trace.
class HeldIntegral {
 public:
  HeldIntegral(std::span<const double> beta, double dt)
      : beta_(beta), dt_(dt), prefix_(beta.size() + 1, 0.0) {
    for (std::size_t i = 0; i < beta.size(); ++i) {
      prefix_[i + 1] = prefix_[i] + beta[i] * dt;
    }
  }
  double at(double t) const {
    const double x = t / dt_;
    auto i = static_cast<std::size_t>(x);
    if (i >= beta_.size()) i = beta_.size() - 1;
    return prefix_[i] + beta_[i] * (t - static_cast<double>(i) * dt_);
  }

 private:
  std::span<const double> beta_;
  double dt_;
  std::vector<double> prefix_;
};

double phase(const HeldIntegral& b, const std::vector<Window>& ws) {
  double phi = 0.0;
  for (const auto& w : ws) phi += w.sign * (b.at(w.end) - b.at(w.start));
  return phi;
}

struct Plan {
  double dt = 0.0;
  std::size_t n = 0;
  std::vector<double> sigmas;
  // windows[s][k]: sequence s at its k-th duration
  std::vector<std::vector<std::vector<Window>>> windows;
};

void check_taus(std::span<const double> taus) {
  require(!taus.empty(), "tau grid is empty");
  for (double t : taus) {
    require(std::isfinite(t) && t > 0.0, "tau grid values must be positive");
  }
}

Plan make_plan(const DephasingRun& run,
               std::span<const PulseSequence> sequences,
               std::span<const std::vector<double>> taus) {
  require(run.shots >= 1, "shot count must be at least 1");
  require(run.batches >= 1 && run.batches <= run.shots,
          "batch count must lie in [1, shots]");
  require(sequences.size() == taus.size(),
          "one tau grid is needed per sequence");
  double tau_min = std::numeric_limits<double>::infinity();
  double tau_max = 0.0;
  double width = run.sequence.pulse_width();
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    check_taus(taus[s]);
    for (double t : taus[s]) {
      tau_min = std::min(tau_min, t);
      tau_max = std::max(tau_max, t);
    }
    if (sequences[s].size() > 0 && sequences[s].pulse_width() > 0.0) {
      width = width > 0.0 ? std::min(width, sequences[s].pulse_width())
                          : sequences[s].pulse_width();
    }
  }
  Plan p;
  if (run.dt > 0.0) {
    p.dt = run.dt;
    if (width > 0.0 && run.dt > width / 10.0 * (1.0 + 1e-12)) {
      fail(ErrorKind::UnderResolvedPulse,
           "dt " + std::to_string(run.dt) + " s exceeds tau_pi/10 = " +
               std::to_string(width / 10.0) + " s");
    }
  } else {
    require(run.dt == 0.0, "dt must be positive (or 0 for the default)");
    PulseSequence probe = run.sequence;
    if (width > 0.0) probe = pulse::custom({0.5}, width);
    p.dt = default_dt(probe, run.spectrum, tau_min);
  }
  noise::check_nyquist(run.spectrum, p.dt);
  p.n = trace_length(run.spectrum, p.dt, tau_max);
  p.sigmas = noise::mode_sigmas(run.spectrum, p.dt, p.n);
  p.windows.resize(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (double t : taus[s]) p.windows[s].push_back(windows(sequences[s], t));
  }
  return p;
}

// Phases of one shot for every (sequence, duration), flattened.
void shot_phases(const DephasingRun& run, const Plan& plan, std::size_t shot,
                 std::vector<double>& trace, double* out) {
  noise::synthesize_into(plan.sigmas, stream_seed(run.seed, shot), trace);
  const HeldIntegral b(trace, plan.dt);
  std::size_t k = 0;
  for (const auto& per_seq : plan.windows) {
    for (const auto& ws : per_seq) out[k++] = phase(b, ws);
  }
}

std::size_t point_count(const Plan& plan) {
  std::size_t m = 0;
  for (const auto& s : plan.windows) m += s.size();
  return m;
}

// phases[shot * m + j]
std::vector<double> all_phases(const DephasingRun& run, const Plan& plan,
                               bool parallel) {
  const std::size_t m = point_count(plan);
  std::vector<double> phases(run.shots * m, 0.0);
  if (run.spectrum.strength() == 0.0) return phases;
  const auto shots = static_cast<std::ptrdiff_t>(run.shots);
  if (parallel) {
    std::exception_ptr error;
#pragma omp parallel
    {
      std::vector<double> trace(plan.n);
#pragma omp for schedule(static)
      for (std::ptrdiff_t s = 0; s < shots; ++s) {
        try {
          shot_phases(run, plan, static_cast<std::size_t>(s), trace,
                      phases.data() + s * static_cast<std::ptrdiff_t>(m));
        } catch (...) {
#pragma omp critical
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    std::vector<double> trace(plan.n);
    for (std::ptrdiff_t s = 0; s < shots; ++s) {
      shot_phases(run, plan, static_cast<std::size_t>(s), trace,
                  phases.data() + s * static_cast<std::ptrdiff_t>(m));
    }
  }
  return phases;
}

// |mean exp(i phi)| over all shots and the batch standard error.
std::pair<double, double> reduce(const std::vector<double>& phases,
                                 std::size_t shots, std::size_t m,
                                 std::size_t j, std::size_t batches) {
  std::complex<double> total{0.0, 0.0};
  std::vector<double> batch_w(batches, 0.0);
  const std::size_t per = shots / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * per;
    const std::size_t hi = b + 1 == batches ? shots : lo + per;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t s = lo; s < hi; ++s) {
      acc += std::polar(1.0, phases[s * m + j]);
    }
    total += acc;
    batch_w[b] = std::abs(acc) / static_cast<double>(hi - lo);
  }
  const double w = std::abs(total) / static_cast<double>(shots);
  if (batches < 2) return {w, 0.0};
  double mean = 0.0;
  for (double x : batch_w) mean += x;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double x : batch_w) var += (x - mean) * (x - mean);
  var /= static_cast<double>(batches - 1);
  return {w, std::sqrt(var / static_cast<double>(batches))};
}

std::vector<CoherenceCurve> run_all(const DephasingRun& run,
                                    std::span<const PulseSequence> sequences,
                                    std::span<const std::vector<double>> taus,
                                    bool parallel) {
  const Plan plan = make_plan(run, sequences, taus);
  const auto phases = all_phases(run, plan, parallel);
  const std::size_t m = point_count(plan);
  std::vector<CoherenceCurve> curves(sequences.size());
  std::size_t j = 0;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    auto& c = curves[s];
    c.method = filter::Method::MonteCarlo;
    c.tau = taus[s];
    for (std::size_t k = 0; k < taus[s].size(); ++k, ++j) {
      const auto [w, se] = reduce(phases, run.shots, m, j, run.batches);
      c.coherence.push_back(w);
      c.uncertainty.push_back(se);
      c.chi.push_back(w > 0.0 ? -std::log(w)
                              : std::numeric_limits<double>::infinity());
    }
  }
  return curves;
}

CoherenceCurve single(const DephasingRun& run, std::span<const double> taus,
                      bool parallel) {
  check_taus(taus);
  const std::vector<double> grid(taus.begin(), taus.end());
  return run_all(run, std::span(&run.sequence, 1), std::span(&grid, 1),
                 parallel)
      .front();
}

}  // namespace

double default_dt(const PulseSequence& seq, const NoiseSpectrum& spectrum,
                  double tau_min) {
  require(std::isfinite(tau_min) && tau_min > 0.0,
          "shortest duration must be positive");
  double dt = std::numeric_limits<double>::infinity();
  if (seq.size() > 0 && seq.pulse_width() > 0.0) {
    dt = seq.pulse_width() / 10.0;
  }
  const double w_max = spectrum.effective_support();
  if (std::isfinite(w_max) && w_max > 0.0) {
    dt = std::min(dt, constants::two_pi / (10.0 * w_max));
  }
  return std::min(dt, tau_min / 64.0);
}

std::size_t trace_length(const NoiseSpectrum& spectrum, double dt,
                         double tau_max) {
  require(dt > 0.0 && tau_max > 0.0, "dt and duration must be positive");
  double span = 8.0 * tau_max;
  if (const auto* law = std::get_if<noise::AmbientPowerLaw>(&spectrum.shape());
      law != nullptr && law->low_cutoff > 0.0) {
    span = std::max(span, 16.0 * constants::two_pi / law->low_cutoff);
  }
  const double need = std::ceil(span / dt);
  if (!(need <= static_cast<double>(kMaxTrace))) {
    fail(ErrorKind::InvalidArgument,
         "noise trace would need " + std::to_string(need) +
             " samples; increase dt or shorten the durations");
  }
  std::size_t n = 2;
  while (static_cast<double>(n) < need) n *= 2;
  return n;
}

CoherenceCurve simulate_coherence(const DephasingRun& run,
                                  std::span<const double> taus) {
  return single(run, taus, true);
}

CoherenceCurve simulate_coherence_serial(const DephasingRun& run,
                                         std::span<const double> taus) {
  return single(run, taus, false);
}

std::vector<CoherenceCurve> simulate_coherence(
    const DephasingRun& run, std::span<const PulseSequence> sequences,
    std::span<const std::vector<double>> taus) {
  return run_all(run, sequences, taus, true);
}

FringeCurve simulate_ramsey_fringes(const DephasingRun& run,
                                    double detuning_hz,
                                    std::span<const double> times,
                                    std::size_t ions) {
  require(std::isfinite(detuning_hz), "detuning must be finite");
  require(!times.empty(), "time grid is empty");
  std::vector<double> positive;
  for (double t : times) {
    require(std::isfinite(t) && t >= 0.0, "times must be non-negative");
    if (t > 0.0) positive.push_back(t);
  }
  FringeCurve f;
  f.time.assign(times.begin(), times.end());
  CoherenceCurve c;
  if (!positive.empty()) c = simulate_coherence(run, positive);
  std::size_t k = 0;
  Engine engine = make_engine(derive_seed(run.seed, "projection"));
  for (double t : times) {
    double w = 1.0, se = 0.0;
    if (t > 0.0) {
      w = c.coherence[k];
      se = c.uncertainty[k];
      ++k;
    }
    double p = 0.5 * (1.0 - w * std::cos(constants::two_pi * detuning_hz * t));
    p = std::clamp(p, 0.0, 1.0);
    if (ions > 0) {
      std::binomial_distribution<std::size_t> draw(ions, p);
      p = static_cast<double>(draw(engine)) / static_cast<double>(ions);
    }
    f.population.push_back(p);
    f.coherence.push_back(w);
    f.uncertainty.push_back(se);
  }
  return f;
}

}  // namespace dephase::oracle
