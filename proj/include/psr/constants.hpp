#pragma once

namespace psr::constants {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr double k_boltzmann = 1.380649e-23;        // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

// 87Rb D1 defaults; internal frequencies are in units of Gamma throughout.
inline constexpr double rb87_mass_amu = 86.909180527;
inline constexpr double rb87_d1_lambda_nm = 795.0;
inline constexpr double default_gamma_MHz = 6.0;               // Gamma/(2 pi)
inline constexpr double rb87_d1_excited_splitting_MHz = 814.5; // F'=1 .. F'=2
inline constexpr double rb87_ground_splitting_MHz = 6834.683;  // F=1 .. F=2

}  // namespace psr::constants
