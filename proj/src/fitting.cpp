#include "dephase/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/filter.hpp"

namespace dephase::fit {

namespace {

void check_data(std::span<const double> x, std::span<const double> y,
                std::span<const double> sigma, std::size_t min_points) {
  require(x.size() == y.size(), "x and y must have the same length");
  require(sigma.empty() || sigma.size() == y.size(),
          "sigma must be empty or match the data length");
  require(x.size() >= min_points,
          "need at least " + std::to_string(min_points) + " data points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "data must be finite");
    if (!sigma.empty()) {
      require(std::isfinite(sigma[i]) && sigma[i] > 0.0,
              "sigma values must be positive");
    }
  }
}

double weighted_chi2(const Model& model, std::span<const double> x,
                     std::span<const double> y, std::span<const double> sigma,
                     std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = sigma.empty() ? 1.0 : 1.0 / sigma[i];
    const double r = (y[i] - model(x[i], p)) * w;
    s += r * r;
  }
  return s;
}

}  // namespace

LeastSquaresResult least_squares(const Model& model, std::span<const double> x,
                                 std::span<const double> y,
                                 std::span<const double> sigma,
                                 std::vector<double> p0,
                                 const LeastSquaresOptions& options) {
  check_data(x, y, sigma, p0.size());
  const std::size_t n = x.size();
  const std::size_t m = p0.size();
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  std::vector<double> p = std::move(p0);
  auto residuals = [&](std::span<const double> q, VectorXd& r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = sigma.empty() ? 1.0 : 1.0 / sigma[i];
      r[static_cast<Eigen::Index>(i)] = (y[i] - model(x[i], q)) * w;
    }
  };
  auto jacobian = [&](std::vector<double>& q, MatrixXd& jac) {
    VectorXd rp(n), rm(n);
    for (std::size_t j = 0; j < m; ++j) {
      const double saved = q[j];
      const double h = 1e-6 * std::max(std::abs(saved), 1e-8);
      q[j] = saved + h;
      residuals(q, rp);
      q[j] = saved - h;
      residuals(q, rm);
      q[j] = saved;
      // residual = (y - f) w, so d f w / dp = -(dr/dp)
      jac.col(static_cast<Eigen::Index>(j)) = -(rp - rm) / (2.0 * h);
    }
  };

  VectorXd r(n);
  MatrixXd jac(n, m);
  residuals(p, r);
  double chi2 = r.squaredNorm();
  double lambda = 1e-3;
  LeastSquaresResult out;
  std::size_t it = 0;
  bool converged = chi2 == 0.0;
  for (; it < options.max_iterations && !converged; ++it) {
    jacobian(p, jac);
    const MatrixXd jtj = jac.transpose() * jac;
    const VectorXd jtr = jac.transpose() * r;
    bool accepted = false;
    while (!accepted) {
      MatrixXd a = jtj;
      for (std::size_t j = 0; j < m; ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      }
      const VectorXd step = a.ldlt().solve(jtr);
      std::vector<double> trial(p);
      double rel_step = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        trial[j] += step[static_cast<Eigen::Index>(j)];
        rel_step = std::max(rel_step,
                            std::abs(step[static_cast<Eigen::Index>(j)]) /
                                std::max(std::abs(trial[j]), 1e-300));
      }
      VectorXd rt(n);
      residuals(trial, rt);
      const double chi2t = rt.squaredNorm();
      if (std::isfinite(chi2t) && chi2t <= chi2) {
        const double drop = chi2 - chi2t;
        p = std::move(trial);
        r = rt;
        chi2 = chi2t;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (chi2 == 0.0 || drop <= options.tolerance * chi2 ||
            rel_step <= 1e-13) {
          converged = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // no downhill step exists at working precision: a minimum
          converged = true;
          break;
        }
      }
    }
  }
  jacobian(p, jac);
  const MatrixXd jtj = jac.transpose() * jac;
  MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse();
  out.params = p;
  out.chi2 = chi2;
  out.dof = n > m ? n - m : 0;
  out.iterations = it;
  out.converged = converged;
  out.covariance.resize(m * m);
  out.errors.resize(m);
  const double scale = out.dof > 0 ? out.reduced_chi2() : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.covariance[i * m + j] =
          cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out.errors[i] = std::sqrt(std::max(out.covariance[i * m + i], 0.0) * scale);
  }
  return out;
}

// ---- Rabi ------------------------------------------------------------------

double rabi_lineshape(const RabiModel& model, double omega) {
  require(model.pi_time > 0.0, "pi time must be positive");
  require(model.theta > 0.0, "rotation angle must be positive");
  const double x = (omega - model.omega0) / (constants::two_pi / model.pi_time);
  const double q = 1.0 + x * x;
  const double s = std::sin(0.5 * model.theta * std::sqrt(q));
  return std::clamp(1.0 - s * s / q, 0.0, 1.0);
}

namespace {

struct Stacked {
  std::vector<double> omega, p, sigma, theta;
};

Stacked stack(std::span<const Lineshape> data, std::size_t samples) {
  Stacked s;
  for (const auto& d : data) {
    require(d.omega.size() == d.p_up.size(),
            "lineshape omega and P_up lengths differ");
    require(d.theta > 0.0, "rotation angle must be positive");
    for (std::size_t i = 0; i < d.omega.size(); ++i) {
      s.omega.push_back(d.omega[i]);
      s.p.push_back(d.p_up[i]);
      s.theta.push_back(d.theta);
      if (samples > 0) {
        const double n = static_cast<double>(samples);
        const double v = std::max(d.p_up[i] * (1.0 - d.p_up[i]), 0.25 / n);
        s.sigma.push_back(std::sqrt(v / n));
      }
    }
  }
  return s;
}

}  // namespace

ResonanceFit fit_resonance(std::span<const Lineshape> data, double pi_time,
                           const ResonanceOptions& options) {
  require(pi_time > 0.0, "pi time must be positive");
  require(!data.empty(), "no lineshapes supplied");
  const Stacked s = stack(data, options.samples);
  require(s.omega.size() >= 5, "need at least 5 lineshape points");
  // the model is indexed by point number so theta can vary per point
  std::vector<double> index(s.omega.size());
  std::iota(index.begin(), index.end(), 0.0);
  const Model model = [&](double i, std::span<const double> q) {
    const auto k = static_cast<std::size_t>(i);
    return rabi_lineshape({q[0], pi_time, s.theta[k]}, s.omega[k]);
  };
  const auto [lo, hi] = std::minmax_element(s.omega.begin(), s.omega.end());
  double best = *lo, best_chi2 = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 4000;
  for (int g = 0; g <= kGrid; ++g) {
    const double w0 = *lo + (*hi - *lo) * g / kGrid;
    const double c = weighted_chi2(model, index, s.p, s.sigma,
                                   std::span<const double>(&w0, 1));
    if (c < best_chi2) {
      best_chi2 = c;
      best = w0;
    }
  }
  const auto r = least_squares(model, index, s.p, s.sigma, {best});
  if (!r.converged) {
    fail(ErrorKind::NonConvergence, "resonance fit did not converge");
  }
  ResonanceFit f{r.params[0], r.errors[0], r.reduced_chi2()};
  if (f.reduced_chi2 > options.poor_fit_threshold) {
    fail(ErrorKind::PoorFit, "lineshape fit reduced chi^2 " +
                                 std::to_string(f.reduced_chi2) +
                                 " exceeds " +
                                 std::to_string(options.poor_fit_threshold));
  }
  return f;
}

ResonanceFit fit_resonance(std::span<const double> omega,
                           std::span<const double> p_up, double pi_time,
                           double theta, const ResonanceOptions& options) {
  require(omega.size() == p_up.size(), "omega and P_up lengths differ");
  const Lineshape l{{omega.begin(), omega.end()}, {p_up.begin(), p_up.end()},
                    theta};
  return fit_resonance(std::span(&l, 1), pi_time, options);
}

// ---- alpha -----------------------------------------------------------------

AlphaFit calibrate_alpha(std::span<const double> tau,
                         std::span<const double> contrast_loss,
                         std::span<const double> sigma,
                         const noise::NoiseSpectrum& shape,
                         const pulse::PulseSequence& sequence) {
  check_data(tau, contrast_loss, sigma, 2);
  const double top =
      *std::max_element(contrast_loss.begin(), contrast_loss.end());
  if (top < 0.05) {
    fail(ErrorKind::Degenerate,
         "coherence never drops below 0.9; alpha is not constrained");
  }
  std::vector<double> c(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    c[i] = filter::chi_shape(sequence, tau[i], shape).chi;
  }
  std::vector<double> guesses;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double y = contrast_loss[i];
    if (y > 0.01 && y < 0.45 && c[i] > 0.0) {
      guesses.push_back(-std::log(1.0 - 2.0 * y) / c[i]);
    }
  }
  double a0 = 0.0;
  if (guesses.empty()) {
    // everything saturated: start where the first point would be near 1/e
    for (std::size_t i = 0; i < tau.size() && a0 == 0.0; ++i) {
      if (c[i] > 0.0) a0 = 1.0 / c[i];
    }
  } else {
    std::nth_element(guesses.begin(), guesses.begin() + guesses.size() / 2,
                     guesses.end());
    a0 = guesses[guesses.size() / 2];
  }
  require(a0 > 0.0, "filter overlap vanishes for every duration");
  std::vector<double> index(tau.size());
  std::iota(index.begin(), index.end(), 0.0);
  // fit log(alpha) so alpha stays positive
  const Model model = [&](double i, std::span<const double> q) {
    return 0.5 * (1.0 - std::exp(-std::exp(q[0]) * c[static_cast<std::size_t>(i)]));
  };
  const auto r =
      least_squares(model, index, contrast_loss, sigma, {std::log(a0)});
  if (!r.converged) {
    fail(ErrorKind::NonConvergence, "alpha fit did not converge");
  }
  const double alpha = std::exp(r.params[0]);
  return {alpha, alpha * r.errors[0], r.reduced_chi2()};
}

// ---- decay -----------------------------------------------------------------

std::string decay_model_name(DecayModel m) {
  return m == DecayModel::Exponential ? "exponential" : "gaussian";
}

double runs_statistic(std::span<const double> residuals) {
  std::vector<int> signs;
  for (double r : residuals) {
    if (r > 0.0) signs.push_back(1);
    if (r < 0.0) signs.push_back(-1);
  }
  const double n1 = static_cast<double>(std::count(signs.begin(), signs.end(), 1));
  const double n2 = static_cast<double>(signs.size()) - n1;
  const double n = n1 + n2;
  if (n1 == 0.0 || n2 == 0.0 || n < 3.0) return 0.0;
  double runs = 1.0;
  for (std::size_t i = 1; i < signs.size(); ++i) {
    if (signs[i] != signs[i - 1]) runs += 1.0;
  }
  const double mu = 2.0 * n1 * n2 / n + 1.0;
  const double var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
  return var > 0.0 ? (runs - mu) / std::sqrt(var) : 0.0;
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> y,
                   std::span<const double> sigma, DecayModel model,
                   bool with_offset) {
  check_data(t, y, sigma, 4);
  const bool gauss = model == DecayModel::Gaussian;
  // log-linear start from the positive points
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] <= 0.0) continue;
    const double u = gauss ? t[i] * t[i] : t[i];
    const double v = std::log(y[i]);
    sx += u;
    sy += v;
    sxx += u * u;
    sxy += u * v;
    cnt += 1.0;
  }
  double a0 = *std::max_element(y.begin(), y.end());
  double t0 = 0.5 * (*std::max_element(t.begin(), t.end()));
  if (cnt >= 2.0 && cnt * sxx - sx * sx > 0.0) {
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / cnt;
    if (slope < 0.0) {
      a0 = std::exp(icpt);
      t0 = gauss ? std::sqrt(-1.0 / slope) : -1.0 / slope;
    }
  }
  const Model f = [gauss, with_offset](double x, std::span<const double> p) {
    const double u = x / p[1];
    const double v = p[0] * std::exp(gauss ? -u * u : -u);
    return with_offset ? v + p[2] : v;
  };
  std::vector<double> p0{a0, t0};
  if (with_offset) p0.push_back(0.0);
  const auto r = least_squares(f, t, y, sigma, p0);
  if (!r.converged || !(r.params[1] > 0.0)) {
    fail(ErrorKind::NonConvergence,
         decay_model_name(model) + " fit did not converge to a positive time "
                                   "constant");
  }
  DecayFit d;
  d.model = model;
  d.amplitude = r.params[0];
  d.time_constant = r.params[1];
  d.amplitude_error = r.errors[0];
  d.time_constant_error = r.errors[1];
  if (with_offset) {
    d.offset = r.params[2];
    d.offset_error = r.errors[2];
  }
  d.residual_norm = std::sqrt(r.chi2);
  d.reduced_chi2 = r.reduced_chi2();
  std::vector<double> res(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) res[i] = y[i] - f(t[i], r.params);
  d.runs_z = runs_statistic(res);
  return d;
}

// ---- fluorescence ----------------------------------------------------------

Fluorescence normalize_fluorescence(double bright_rate,
                                    std::span<const double> bins,
                                    double bin_width) {
  require(bright_rate > 0.0, "bright reference rate must be positive");
  require(bin_width > 0.0, "bin width must be positive");
  require(bins.size() >= 2, "need at least two post-measurement bins");
  const double n = static_cast<double>(bins.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    require(std::isfinite(bins[i]), "bin rates must be finite");
    const double x = (static_cast<double>(i) + 0.5) * bin_width;
    sx += x;
    sy += bins[i];
    sxx += x * x;
    sxy += x * bins[i];
  }
  Fluorescence f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  if (f.intercept < 0.0) {
    f.negative_rate = true;
    f.intercept = 0.0;
  }
  f.p_up = f.intercept / bright_rate;
  return f;
}

// ---- sinusoid --------------------------------------------------------------

SinusoidFit fit_sinusoid(std::span<const double> t, std::span<const double> y,
                         double f_min, double f_max) {
  check_data(t, y, {}, 5);
  require(f_min > 0.0 && f_max > f_min, "frequency range must be positive");
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) yy[i] = y[static_cast<std::size_t>(i)];
  auto linear = [&](double f, Eigen::Vector3d& coef) {
    Eigen::MatrixXd a(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ph = constants::two_pi * f * t[static_cast<std::size_t>(i)];
      a(i, 0) = 1.0;
      a(i, 1) = std::cos(ph);
      a(i, 2) = std::sin(ph);
    }
    coef = a.colPivHouseholderQr().solve(yy);
    return (a * coef - yy).squaredNorm();
  };
  constexpr int kGrid = 4000;
  double best_f = f_min, best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d coef = Eigen::Vector3d::Zero();
  Eigen::Vector3d best_coef = coef;
  for (int g = 0; g <= kGrid; ++g) {
    const double f = f_min * std::pow(f_max / f_min, double(g) / kGrid);
    const double s = linear(f, coef);
    if (s < best) {
      best = s;
      best_f = f;
      best_coef = coef;
    }
  }
  const Model m = [](double x, std::span<const double> p) {
    const double ph = constants::two_pi * p[3] * x;
    return p[0] + p[1] * std::cos(ph) + p[2] * std::sin(ph);
  };
  const auto r = least_squares(m, t, y, {},
                               {best_coef[0], best_coef[1], best_coef[2], best_f});
  if (!r.converged) {
    fail(ErrorKind::NonConvergence, "sinusoid fit did not converge");
  }
  const double a = r.params[1], b = r.params[2];
  SinusoidFit s;
  s.offset = r.params[0];
  s.amplitude = std::hypot(a, b);
  s.frequency = r.params[3];
  s.phase = std::atan2(-b, a);
  s.frequency_error = r.errors[3];
  const double r2 = a * a + b * b;
  if (r2 > 0.0) {
    const double scale = r.dof > 0 ? r.reduced_chi2() : 1.0;
    const auto& c = r.covariance;
    const double da = b / r2, db = -a / r2;
    const double var =
        (da * da * c[1 * 4 + 1] + 2 * da * db * c[1 * 4 + 2] +
         db * db * c[2 * 4 + 2]) * scale;
    s.phase_error = std::sqrt(std::max(var, 0.0));
  }
  s.reduced_chi2 = r.reduced_chi2();
  return s;
}

}  // namespace dephase::fit
