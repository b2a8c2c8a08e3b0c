// constants.hpp: unit system and the few embedded physical constants
#pragma once

namespace fluxkit {

// Internal unit system: energies and frequencies in GHz (E/h), time in us,
// flux in Phi0, temperature in K. Interfaces that speak mK or MHz convert at
// the boundary.
inline constexpr double kb_h_ghz_per_k = 20.836619;   // k_B/h
inline constexpr double r_klitzing_ohm = 25812.807;   // h/e^2, Ambegaokar-Baratoff bridge

}  // namespace fluxkit
