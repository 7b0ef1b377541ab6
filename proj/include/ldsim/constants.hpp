#pragma once

namespace ldsim::phys {

inline constexpr double q = 1.602176634e-19;         // C
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K
inline constexpr double kb_over_q = k_boltzmann / q; // V/K
inline constexpr double eps0 = 8.8541878128e-14;     // F/cm
inline constexpr double lorenz = 2.44e-8;            // W·Ω/K²

inline constexpr double um_to_cm = 1e-4;
inline constexpr double cm_to_um = 1e4;

/// Thermal voltage k_B·T/q in volts.
template <typename T>
constexpr T thermal_voltage(const T& temperature) { return temperature * kb_over_q; }

}  // namespace ldsim::phys
