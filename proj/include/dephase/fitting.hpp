#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dephase/pulse.hpp"
#include "dephase/spectrum.hpp"

namespace dephase::fit {

// Weighted nonlinear least squares (Levenberg-Marquardt, forward-difference
// Jacobian). Empty `sigma` means unit weights.
using Model = std::function<double(double x, std::span<const double> p)>;

struct LeastSquaresOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-14;  // relative step / chi^2 change
};

struct LeastSquaresResult {
  std::vector<double> params;
  std::vector<double> errors;      // 1 sigma, covariance scaled by reduced chi^2
  std::vector<double> covariance;  // row-major, unscaled
  double chi2 = 0.0;
  std::size_t dof = 0;
  std::size_t iterations = 0;
  bool converged = false;

  double reduced_chi2() const {
    return dof > 0 ? chi2 / static_cast<double>(dof) : 0.0;
  }
};

LeastSquaresResult least_squares(const Model& model, std::span<const double> x,
                                 std::span<const double> y,
                                 std::span<const double> sigma,
                                 std::vector<double> p0,
                                 const LeastSquaresOptions& options = {});

// ---- Rabi lineshape -------------------------------------------------------

struct RabiModel {
  double omega0 = 0.0;   // rad/s
  double pi_time = 0.0;  // s
  double theta = 0.0;    // rad
};

// P_up = 1 - sin^2[(theta/2) sqrt(1 + x^2)] / (1 + x^2),
// x = (omega - omega0) / (2 pi / tau_pi).
double rabi_lineshape(const RabiModel& model, double omega);

struct Lineshape {
  std::vector<double> omega;
  std::vector<double> p_up;
  double theta = 0.0;
};

struct ResonanceFit {
  double omega0 = 0.0;
  double ci = 0.0;  // 68 %
  double reduced_chi2 = 0.0;
};

struct ResonanceOptions {
  // Points are weighted by the binomial variance of `samples` averaged
  // shots; 0 means unit weights.
  std::size_t samples = 0;
  double poor_fit_threshold = 10.0;  // on reduced chi^2
};

// One free parameter, omega0. Throws PoorFit above the threshold.
ResonanceFit fit_resonance(std::span<const double> omega,
                           std::span<const double> p_up, double pi_time,
                           double theta, const ResonanceOptions& options = {});
// Common omega0 shared by several lineshapes.
ResonanceFit fit_resonance(std::span<const Lineshape> data, double pi_time,
                           const ResonanceOptions& options = {});

// ---- Noise-strength calibration -------------------------------------------

struct AlphaFit {
  double alpha = 0.0;
  double ci = 0.0;
  double reduced_chi2 = 0.0;
};

// Fits (1 - exp(-alpha chi_shape(tau)))/2 to the contrast-loss data
// (1 - W)/2. Empty `sigma` means unit weights. Throws Degenerate when the
// data never fall below W = 0.9.
AlphaFit calibrate_alpha(std::span<const double> tau,
                         std::span<const double> contrast_loss,
                         std::span<const double> sigma,
                         const noise::NoiseSpectrum& shape,
                         const pulse::PulseSequence& sequence = pulse::ramsey());

// ---- Decay fits -------------------------------------------------------------

enum class DecayModel { Exponential, Gaussian };
std::string decay_model_name(DecayModel m);

struct DecayFit {
  DecayModel model = DecayModel::Exponential;
  double amplitude = 0.0;
  double time_constant = 0.0;
  double offset = 0.0;
  double amplitude_error = 0.0;
  double time_constant_error = 0.0;
  double offset_error = 0.0;
  double residual_norm = 0.0;  // sqrt of the weighted sum of squares
  double reduced_chi2 = 0.0;
  // Wald-Wolfowitz runs statistic of the residual signs; strongly negative
  // values mean too few sign changes, i.e. structured residuals.
  double runs_z = 0.0;
  bool structured() const { return runs_z < -2.0; }
};

// y = A exp(-t/T) [+ c] or y = A exp(-(t/T)^2) [+ c]. Throws NonConvergence.
DecayFit fit_decay(std::span<const double> t, std::span<const double> y,
                   std::span<const double> sigma, DecayModel model,
                   bool with_offset = false);

double runs_statistic(std::span<const double> residuals);

// ---- Fluorescence normalization --------------------------------------------

struct Fluorescence {
  double p_up = 0.0;
  double intercept = 0.0;  // count rate extrapolated to the sequence end
  double slope = 0.0;
  bool negative_rate = false;  // intercept < 0, clamped to 0
};

// Linear fit of the post-measurement bin rates against bin-center time,
// extrapolated to t = 0 and divided by the bright reference rate.
Fluorescence normalize_fluorescence(double bright_rate,
                                    std::span<const double> bins,
                                    double bin_width = 10e-3);

// ---- Sinusoid --------------------------------------------------------------

struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;  // >= 0
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad, y = offset + amplitude cos(2 pi f t + phase)
  double frequency_error = 0.0;
  double phase_error = 0.0;
  double reduced_chi2 = 0.0;
};

// Frequency scanned over [f_min, f_max] with linear amplitudes, then refined
// jointly.
SinusoidFit fit_sinusoid(std::span<const double> t, std::span<const double> y,
                         double f_min, double f_max);

}  // namespace dephase::fit
