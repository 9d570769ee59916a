#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace dephase::noise {

// Convention shared by every module: S is one-sided in omega and normalized
// so that chi(tau) = (2/pi) * Integral_0^inf S(w)/w^2 F(w tau) dw. With that
// normalization the two-sided power spectral density of beta(t) (the Fourier
// transform of its autocorrelation) is 4*S.

struct SpectralLine {
  double center = 0.0;  // rad/s
  double weight = 0.0;  // integrated power, S * rad/s
};

// alpha * max(w, low_cutoff)^-exponent plus Lorentzian lines, optionally
// truncated above high_cutoff.
struct AmbientPowerLaw {
  double exponent = 4.0;
  double low_cutoff = 0.0;  // rad/s
  std::vector<SpectralLine> lines;
  double line_fwhm_hz = 1.0;
  double high_cutoff = std::numeric_limits<double>::infinity();  // rad/s
};

// alpha * w below high_cutoff, zero above.
struct OhmicSharpCutoff {
  double high_cutoff = 0.0;  // rad/s
};

struct White {};

// Log-log interpolated table, zero outside [front, back].
struct Tabulated {
  std::vector<double> omega;
  std::vector<double> value;
};

using SpectrumShape =
    std::variant<AmbientPowerLaw, OhmicSharpCutoff, White, Tabulated>;

class NoiseSpectrum {
 public:
  NoiseSpectrum(SpectrumShape shape, double strength);

  static NoiseSpectrum white(double level);
  static NoiseSpectrum ohmic(double strength, double high_cutoff);
  static NoiseSpectrum ambient(double strength, double exponent,
                               double low_cutoff);
  static NoiseSpectrum tabulated(std::vector<double> omega,
                                 std::vector<double> value,
                                 double strength = 1.0);

  const SpectrumShape& shape() const { return shape_; }
  double strength() const { return strength_; }
  NoiseSpectrum with_strength(double strength) const;

  // S(w) for w >= 0; throws NegativeFrequency otherwise.
  double operator()(double omega) const;
  // Shape only, i.e. S(w) / alpha.
  double shape_value(double omega) const;

  // Frequencies where S or its derivative is discontinuous or sharply peaked.
  std::vector<double> breakpoints() const;

  // Upper edge of a hard spectral support, +inf for unbounded shapes.
  double support_limit() const;

  // Frequency above which S(w) < rel * max S. Equals support_limit for hard
  // cutoffs; for power laws it solves the decay threshold.
  double effective_support(double rel = 1e-8) const;

  std::string kind_name() const;

 private:
  SpectrumShape shape_;
  double strength_ = 1.0;
};

// Two-column text: omega [rad/s], S. '#' starts a comment.
Tabulated read_tabulated(std::istream& in);
Tabulated read_tabulated_file(const std::string& path);
void write_tabulated(std::ostream& out, const Tabulated& table);

}  // namespace dephase::noise
