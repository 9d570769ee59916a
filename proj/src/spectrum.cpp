#include "dephase/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"

namespace dephase::noise {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double line_hwhm(const AmbientPowerLaw& s) {
  return constants::pi * s.line_fwhm_hz;
}

void validate_shape(const SpectrumShape& shape) {
  std::visit(
      overloaded{
          [](const AmbientPowerLaw& s) {
            require(std::isfinite(s.exponent), "power-law exponent must be finite");
            require(s.low_cutoff >= 0.0 && std::isfinite(s.low_cutoff),
                    "low cutoff must be finite and non-negative");
            require(s.high_cutoff > s.low_cutoff,
                    "high cutoff must exceed low cutoff");
            require(s.line_fwhm_hz > 0.0, "line width must be positive");
            for (const auto& l : s.lines) {
              require(l.center >= 0.0 && std::isfinite(l.center),
                      "spectral line center must be non-negative");
              require(l.weight >= 0.0 && std::isfinite(l.weight),
                      "spectral line weight must be non-negative");
            }
          },
          [](const OhmicSharpCutoff& s) {
            require(s.high_cutoff > 0.0 && std::isfinite(s.high_cutoff),
                    "Ohmic cutoff must be positive and finite");
          },
          [](const White&) {},
          [](const Tabulated& t) {
            require(t.omega.size() == t.value.size(),
                    "tabulated spectrum columns differ in length");
            require(t.omega.size() >= 2,
                    "tabulated spectrum needs at least two points");
            for (std::size_t i = 0; i < t.omega.size(); ++i) {
              require(std::isfinite(t.omega[i]) && t.omega[i] >= 0.0,
                      "tabulated frequencies must be non-negative");
              require(std::isfinite(t.value[i]) && t.value[i] >= 0.0,
                      "tabulated values must be non-negative");
              if (i > 0) {
                require(t.omega[i] > t.omega[i - 1],
                        "tabulated frequencies must be strictly increasing");
              }
            }
          },
      },
      shape);
}

double tabulated_value(const Tabulated& t, double omega) {
  if (omega < t.omega.front() || omega > t.omega.back()) return 0.0;
  auto it = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
  if (it == t.omega.end()) return t.value.back();
  const std::size_t hi = static_cast<std::size_t>(it - t.omega.begin());
  const std::size_t lo = hi - 1;
  const double w0 = t.omega[lo], w1 = t.omega[hi];
  const double s0 = t.value[lo], s1 = t.value[hi];
  if (w0 > 0.0 && s0 > 0.0 && s1 > 0.0) {
    const double f = std::log(omega / w0) / std::log(w1 / w0);
    return s0 * std::exp(f * std::log(s1 / s0));
  }
  // log-log undefined at zero frequency or zero power
  const double f = (omega - w0) / (w1 - w0);
  return s0 + f * (s1 - s0);
}

}  // namespace

NoiseSpectrum::NoiseSpectrum(SpectrumShape shape, double strength)
    : shape_(std::move(shape)), strength_(strength) {
  require(std::isfinite(strength_) && strength_ >= 0.0,
          "noise strength alpha must be non-negative");
  validate_shape(shape_);
}

NoiseSpectrum NoiseSpectrum::white(double level) {
  return NoiseSpectrum(White{}, level);
}

NoiseSpectrum NoiseSpectrum::ohmic(double strength, double high_cutoff) {
  return NoiseSpectrum(OhmicSharpCutoff{high_cutoff}, strength);
}

NoiseSpectrum NoiseSpectrum::ambient(double strength, double exponent,
                                     double low_cutoff) {
  AmbientPowerLaw s;
  s.exponent = exponent;
  s.low_cutoff = low_cutoff;
  return NoiseSpectrum(s, strength);
}

NoiseSpectrum NoiseSpectrum::tabulated(std::vector<double> omega,
                                       std::vector<double> value,
                                       double strength) {
  return NoiseSpectrum(Tabulated{std::move(omega), std::move(value)},
                       strength);
}

NoiseSpectrum NoiseSpectrum::with_strength(double strength) const {
  return NoiseSpectrum(shape_, strength);
}

double NoiseSpectrum::shape_value(double omega) const {
  if (!(omega >= 0.0)) {
    fail(ErrorKind::NegativeFrequency, "spectrum evaluated at omega < 0");
  }
  return std::visit(
      overloaded{
          [omega](const AmbientPowerLaw& s) {
            if (omega > s.high_cutoff) return 0.0;
            double v = 0.0;
            const double w = std::max(omega, s.low_cutoff);
            if (w > 0.0) {
              v = std::pow(w, -s.exponent);
            } else {
              v = s.exponent > 0.0 ? std::numeric_limits<double>::infinity()
                                   : (s.exponent == 0.0 ? 1.0 : 0.0);
            }
            const double g = line_hwhm(s);
            for (const auto& l : s.lines) {
              const double d = omega - l.center;
              v += l.weight * (g / constants::pi) / (d * d + g * g);
            }
            return v;
          },
          [omega](const OhmicSharpCutoff& s) {
            return omega <= s.high_cutoff ? omega : 0.0;
          },
          [](const White&) { return 1.0; },
          [omega](const Tabulated& t) { return tabulated_value(t, omega); },
      },
      shape_);
}

double NoiseSpectrum::operator()(double omega) const {
  const double v = shape_value(omega);
  return strength_ == 0.0 ? 0.0 : strength_ * v;
}

std::vector<double> NoiseSpectrum::breakpoints() const {
  std::vector<double> out = std::visit(
      overloaded{
          [](const AmbientPowerLaw& s) {
            std::vector<double> b;
            if (s.low_cutoff > 0.0) b.push_back(s.low_cutoff);
            if (std::isfinite(s.high_cutoff)) b.push_back(s.high_cutoff);
            const double g = line_hwhm(s);
            for (const auto& l : s.lines) {
              for (double k : {-50.0, -10.0, -2.0, 0.0, 2.0, 10.0, 50.0}) {
                const double w = l.center + k * g;
                if (w > 0.0) b.push_back(w);
              }
            }
            return b;
          },
          [](const OhmicSharpCutoff& s) {
            return std::vector<double>{s.high_cutoff};
          },
          [](const White&) { return std::vector<double>{}; },
          [](const Tabulated& t) {
            std::vector<double> b;
            for (double w : t.omega) {
              if (w > 0.0) b.push_back(w);
            }
            return b;
          },
      },
      shape_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double NoiseSpectrum::support_limit() const {
  return std::visit(
      overloaded{
          [](const AmbientPowerLaw& s) { return s.high_cutoff; },
          [](const OhmicSharpCutoff& s) { return s.high_cutoff; },
          [](const White&) { return std::numeric_limits<double>::infinity(); },
          [](const Tabulated& t) {
            for (std::size_t i = t.value.size(); i-- > 0;) {
              if (t.value[i] > 0.0) {
                return i + 1 < t.omega.size() ? t.omega[i + 1] : t.omega[i];
              }
            }
            return 0.0;
          },
      },
      shape_);
}

double NoiseSpectrum::effective_support(double rel) const {
  require(rel > 0.0 && rel < 1.0, "relative threshold must lie in (0, 1)");
  const double hard = support_limit();
  return std::visit(
      overloaded{
          [&](const AmbientPowerLaw& s) {
            double w = hard;
            if (s.exponent > 0.0 && s.low_cutoff > 0.0) {
              w = std::min(w, s.low_cutoff * std::pow(rel, -1.0 / s.exponent));
            }
            double top = 0.0;
            for (const auto& l : s.lines) top = std::max(top, l.center);
            if (!s.lines.empty()) {
              w = std::isfinite(w) ? std::max(w, 2.0 * top) : w;
            }
            return w;
          },
          [&](const OhmicSharpCutoff&) { return hard; },
          [&](const White&) { return hard; },
          [&](const Tabulated&) { return hard; },
      },
      shape_);
}

std::string NoiseSpectrum::kind_name() const {
  return std::visit(
      overloaded{
          [](const AmbientPowerLaw&) { return std::string("ambient"); },
          [](const OhmicSharpCutoff&) { return std::string("ohmic"); },
          [](const White&) { return std::string("white"); },
          [](const Tabulated&) { return std::string("tabulated"); },
      },
      shape_);
}

Tabulated read_tabulated(std::istream& in) {
  Tabulated t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ss(line);
    double w = 0.0, s = 0.0;
    if (!(ss >> w)) continue;
    if (!(ss >> s)) {
      fail(ErrorKind::InvalidArgument,
           "tabulated spectrum line " + std::to_string(lineno) +
               " needs two columns");
    }
    t.omega.push_back(w);
    t.value.push_back(s);
  }
  NoiseSpectrum(t, 1.0);  // validates
  return t;
}

Tabulated read_tabulated_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open spectrum file " + path);
  return read_tabulated(in);
}

void write_tabulated(std::ostream& out, const Tabulated& table) {
  out << "# omega[rad/s] S\n";
  out << std::setprecision(12);
  for (std::size_t i = 0; i < table.omega.size(); ++i) {
    out << table.omega[i] << ' ' << table.value[i] << '\n';
  }
}

}  // namespace dephase::noise
