#pragma once

#include <optional>

namespace dephase::trap {

// Electrode description of an ideal (or cylindrical, near-center) Penning
// trap. The geometry enters only through z0^2 + r0^2/2, which can be given
// directly when the individual electrode dimensions are unknown.
class TrapConfig {
 public:
  TrapConfig(double charge, double mass, double field, double voltage,
             double ring_radius, double endcap_distance);

  static TrapConfig from_geometry_factor(double charge, double mass,
                                         double field, double voltage,
                                         double geometry_factor);

  double charge() const { return charge_; }
  double mass() const { return mass_; }
  double field() const { return field_; }
  double voltage() const { return voltage_; }
  double geometry_factor() const { return geometry_factor_; }
  std::optional<double> ring_radius() const { return ring_radius_; }
  std::optional<double> endcap_distance() const { return endcap_distance_; }

 private:
  TrapConfig() = default;
  void validate() const;

  double charge_ = 0.0;
  double mass_ = 0.0;
  double field_ = 0.0;
  double voltage_ = 0.0;
  double geometry_factor_ = 0.0;  // z0^2 + r0^2/2 [m^2]
  std::optional<double> ring_radius_;
  std::optional<double> endcap_distance_;
};

// All frequencies in rad/s.
struct ModeFrequencies {
  double cyclotron = 0.0;
  double axial = 0.0;
  double modified_cyclotron = 0.0;
  double magnetron = 0.0;
  double omega1 = 0.0;
};

struct PlasmaState {
  double density = 0.0;      // m^-3
  double temperature = 0.0;  // K
};

// Qubit-frequency gradients. Units: Hz/mm and Hz/mm^2.
struct FieldGradientModel {
  double axial = 0.0;
  double transverse = 0.0;
  double radial_quadratic = 0.0;
};

inline constexpr double default_crystallization_threshold = 170.0;

struct CouplingResult {
  double gamma = 0.0;
  bool crystallized = false;
};

double cyclotron_frequency(const TrapConfig& cfg);

// Throws NonConfining when q*U0 <= 0.
double axial_frequency(const TrapConfig& cfg);

// Throws Unstable when omega_c^2 <= 2 omega_z^2.
ModeFrequencies radial_frequencies(double cyclotron, double axial);
ModeFrequencies radial_frequencies(const TrapConfig& cfg, double axial);
ModeFrequencies mode_frequencies(const TrapConfig& cfg);

bool is_stable(double cyclotron, double axial);

CouplingResult coupling_constant(
    const PlasmaState& plasma,
    double threshold = default_crystallization_threshold);

// Temperature at which the coupling constant reaches `gamma` for density n.
double temperature_for_coupling(double density, double gamma);

bool rotation_frequency_valid(double rotation, const ModeFrequencies& modes);

// Static qubit-frequency shift [Hz] at axial offset z [mm] and radius r [mm].
// The transverse term is the unaveraged worst case; array rotation averages
// it away in practice.
double inhomogeneity_shift(const FieldGradientModel& model, double z_mm,
                           double r_mm);

}  // namespace dephase::trap
