// noise_models.hpp: forward models for every decoherence channel
#pragma once

#include <optional>
#include <string>

#include "fluxkit/qubit_model.hpp"

namespace fluxkit {

// ---- domain types ----

struct NoiseEnvironment {
  double tan_delta_c = 0.0;    // dielectric loss tangent
  double temp = 0.0;           // qubit effective temperature, K; 0 selects the TLS (T=0) variant
  double loss_exponent = 0.0;  // epsilon in tan_delta_eff = tan_delta_c * (f01/1 GHz)^epsilon
  double a_phi = 0.0;          // 1/f flux noise amplitude, uPhi0/sqrt(Hz)
  double a_white = 0.0;        // flat flux PSD amplitude, same unit family; S_white = a_white^2
  double x_qp = 0.0;           // normalized quasiparticle density
  double delta_gap = 44.0;     // superconducting gap Delta/h, GHz (aluminum default)

  void validate() const;  // all fields nonnegative
};

struct CavityParams {
  double kappa = 0.0;     // linewidth kappa/2pi, MHz
  double chi = 0.0;       // dispersive shift chi/2pi, MHz
  double f_cavity = 0.0;  // GHz
  double n_bar = 0.0;     // mean photon number

  void validate() const;  // kappa > 0, chi != 0, n_bar >= 0
};

// Ramsey or CPMG(N); spin echo is CPMG(1). n_pulses == 0 encodes Ramsey.
struct SequenceType {
  int n_pulses = 1;
  double ramsey_cutoff_hz = 1.0;  // low-frequency cutoff for the Ramsey filter

  static SequenceType ramsey(double cutoff_hz = 1.0);
  static SequenceType cpmg(int n);
  bool is_ramsey() const { return n_pulses == 0; }
  std::string name() const;  // "ramsey", "cpmg1", ...
};

enum class QpChannel { jj, jja };

// ---- relaxation channels ----

// Dielectric loss: 1/T1 = pi f01^2 / (2 e_c) * tan_delta_eff * |<0|phi|1>|^2
//                         * coth(f01 / (2 kb_h T)),
// coth == 1 exactly at temp = 0 (TLS variant). Returns T1 in us.
double t1_dielectric(const EigenSolution& sol, const MatrixElements& elems,
                     const NoiseEnvironment& env);

// Quasiparticle tunneling rate in 1/us. JJ channel couples through
// |<0|sin(phi/2)|1>|^2 * 16 e_j; JJA channel through |<0|phi/2|1>|^2 * 16 e_l;
// both carry x_qp * sqrt(2 delta_gap / f01) * (1 + exp(-f01 / (kb_h T))).
// Requires delta_gap > f01.
double t1_quasiparticle(const EigenSolution& sol, const MatrixElements& elems,
                        const NoiseEnvironment& env, QpChannel channel);

// ---- thermal population ----

// Two-level excited fraction b = 1 / (1 + exp(f01 / (kb_h T))); 0 at temp = 0.
double thermal_population(double f01, double temp_k);
// Exact inverse; requires 0 < b < 0.5.
double effective_temperature(double b, double f01);

// ---- dephasing ----

// Sequence coefficient u with the Gaussian envelope defined as
// exp[-(t * D * A_phi * u)^2]: u^2 = (1/t^2) Integral_0^inf |y(w,t)|^2 / w dw
// against S_Phi(w) = A_phi^2 (2pi 1Hz / w). t-independent for CPMG; for Ramsey
// the 1 Hz cutoff makes u depend (logarithmically) on t, so t_us is required.
// Quadrature: 15-point Gauss-Kronrod on pi-length segments plus analytic tail,
// absolute tolerance 1e-6 (checked; throws solver_error if unmet).
double filter_u_coefficient(const SequenceType& seq,
                            std::optional<double> t_us = std::nullopt);

// Composite envelope f_T1(t/2) * f_white(t) * f_N(t) with
//   f_T1(t/2)  = exp(-t / (2 t1)),
//   f_white(t) = exp(-Gamma_w t),   Gamma_w = D^2 a_white^2 / 2  [1/us],
//   f_N(t)     = exp[-(1e-3 t D a_phi u)^2]
// (D in rad*GHz/Phi0, t in us, amplitudes in uPhi0/sqrt(Hz)). The overall
// fitted amplitude a is applied by callers.
double dephasing_envelope(const SequenceType& seq, double d_coeff,
                          const NoiseEnvironment& env, double t_us, double t1_us);

// ---- photon shot noise ----

// Gamma_phi = n_bar * (2 pi kappa) / (1 + kappa^2/chi^2) in 1/us (kappa in MHz).
double photon_shot_dephasing(const CavityParams& cav);
double n_bar_from_dephasing(double gamma_phi_per_us, const CavityParams& cav);
// Bose-Einstein inversion T = f_cavity / (kb_h * ln(1 + 1/n_bar)), K; n_bar > 0.
double cavity_temperature(double n_bar, double f_cavity);

// ---- zeta normalization ----

// zeta = T1 |<0|phi|1>|^2 / e_c, us/GHz.
double zeta(double t1_us, const MatrixElements& elems, const FluxoniumParams& params);

// Model-predicted zeta(f01) for the dielectric channel; matrix element and e_c
// cancel: zeta = 2e-3 / (pi f01^2 tan_delta_eff coth). us/GHz.
double zeta_dielectric_model(double f01, const NoiseEnvironment& env);

// First-order flux-noise relaxation rate per unit |<0|phi|1>|^2, in 1/us:
// (2pi)^4 e_l^2 a_phi^2 * 1e-9 / f01 (module convention for the 1/f spectrum
// evaluated at omega_01).
double flux_noise_rate_coeff(double f01, double e_l, double a_phi);

}  // namespace fluxkit
