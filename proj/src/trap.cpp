#include "dephase/trap.hpp"

#include <cmath>
#include <numbers>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"

namespace dephase::trap {

TrapConfig::TrapConfig(double charge, double mass, double field,
                       double voltage, double ring_radius,
                       double endcap_distance)
    : charge_(charge),
      mass_(mass),
      field_(field),
      voltage_(voltage),
      geometry_factor_(endcap_distance * endcap_distance +
                       0.5 * ring_radius * ring_radius),
      ring_radius_(ring_radius),
      endcap_distance_(endcap_distance) {
  validate();
}

TrapConfig TrapConfig::from_geometry_factor(double charge, double mass,
                                            double field, double voltage,
                                            double geometry_factor) {
  TrapConfig cfg;
  cfg.charge_ = charge;
  cfg.mass_ = mass;
  cfg.field_ = field;
  cfg.voltage_ = voltage;
  cfg.geometry_factor_ = geometry_factor;
  cfg.validate();
  return cfg;
}

void TrapConfig::validate() const {
  require(std::isfinite(charge_) && charge_ != 0.0, "charge must be nonzero");
  require(std::isfinite(mass_) && mass_ > 0.0, "mass must be positive");
  require(std::isfinite(field_) && field_ > 0.0, "B0 must be positive");
  require(std::isfinite(voltage_), "U0 must be finite");
  require(std::isfinite(geometry_factor_) && geometry_factor_ > 0.0,
          "z0^2 + r0^2/2 must be positive");
}

double cyclotron_frequency(const TrapConfig& cfg) {
  return std::abs(cfg.charge()) * cfg.field() / cfg.mass();
}

double axial_frequency(const TrapConfig& cfg) {
  const double qu = cfg.charge() * cfg.voltage();
  if (!(qu > 0.0)) {
    fail(ErrorKind::NonConfining,
         "q*U0 must be positive for axial confinement");
  }
  return std::sqrt(2.0 * qu / (cfg.mass() * cfg.geometry_factor()));
}

bool is_stable(double cyclotron, double axial) {
  return cyclotron * cyclotron > 2.0 * axial * axial;
}

ModeFrequencies radial_frequencies(double cyclotron, double axial) {
  require(std::isfinite(cyclotron) && cyclotron > 0.0,
          "cyclotron frequency must be positive");
  require(std::isfinite(axial) && axial >= 0.0,
          "axial frequency must be non-negative");
  if (!is_stable(cyclotron, axial)) {
    fail(ErrorKind::Unstable, "omega_c^2 <= 2 omega_z^2");
  }
  ModeFrequencies m;
  m.cyclotron = cyclotron;
  m.axial = axial;
  // (wc - w1)(wc + w1) = 2 wz^2, so the magnetron branch is computed from the
  // product to avoid cancellation when wz << wc.
  m.omega1 = std::sqrt((cyclotron - std::numbers::sqrt2 * axial) *
                       (cyclotron + std::numbers::sqrt2 * axial));
  m.modified_cyclotron = 0.5 * (cyclotron + m.omega1);
  m.magnetron = axial * axial / (2.0 * m.modified_cyclotron);
  return m;
}

ModeFrequencies radial_frequencies(const TrapConfig& cfg, double axial) {
  return radial_frequencies(cyclotron_frequency(cfg), axial);
}

ModeFrequencies mode_frequencies(const TrapConfig& cfg) {
  return radial_frequencies(cfg, axial_frequency(cfg));
}

CouplingResult coupling_constant(const PlasmaState& plasma, double threshold) {
  require(std::isfinite(plasma.density) && plasma.density > 0.0,
          "plasma density must be positive");
  require(plasma.temperature > 0.0, "plasma temperature must be positive");
  using namespace constants;
  const double wigner_seitz =
      std::cbrt(3.0 / (4.0 * pi * plasma.density));
  const double coulomb = elementary_charge * elementary_charge /
                         (4.0 * pi * vacuum_permittivity * wigner_seitz);
  CouplingResult r;
  r.gamma = coulomb / (boltzmann * plasma.temperature);
  r.crystallized = r.gamma > threshold;
  return r;
}

double temperature_for_coupling(double density, double gamma) {
  require(gamma > 0.0, "coupling constant must be positive");
  return coupling_constant({density, 1.0}).gamma / gamma;
}

bool rotation_frequency_valid(double rotation, const ModeFrequencies& modes) {
  return modes.magnetron <= rotation && rotation <= modes.modified_cyclotron;
}

double inhomogeneity_shift(const FieldGradientModel& model, double z_mm,
                           double r_mm) {
  require(std::isfinite(model.axial) && std::isfinite(model.transverse) &&
              std::isfinite(model.radial_quadratic),
          "gradient coefficients must be finite");
  return model.axial * z_mm + model.transverse * r_mm +
         model.radial_quadratic * r_mm * r_mm;
}

}  // namespace dephase::trap
