#pragma once

#include <numbers>

// CODATA 2018 values.
namespace dephase::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double elementary_charge = 1.602176634e-19;    // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double boltzmann = 1.380649e-23;               // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;   // kg

inline constexpr double beryllium9_mass_amu = 9.012182;

// 9Be+ electron-spin-flip qubit near 4.5 T.
inline constexpr double qubit_frequency_hz = 124e9;
inline constexpr double qubit_field_sensitivity_hz_per_tesla = 28e9;  // 28 MHz/mT
inline constexpr double nominal_field_tesla = 4.5;

// Nuclear-spin-flip transitions at 4.5 T (labels only).
inline constexpr double nuclear_f1_hz = 288e6;
inline constexpr double nuclear_f2_hz = 340e6;
inline constexpr double nuclear_f3_hz = 286e6;

}  // namespace dephase::constants
