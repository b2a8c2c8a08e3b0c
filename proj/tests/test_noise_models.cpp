// test_noise_models.cpp: decoherence channel formulas against scalar
// recalculations, published device anchors, and analytic quadrature limits
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fluxkit/constants.hpp"
#include "fluxkit/errors.hpp"
#include "fluxkit/noise_models.hpp"
#include "fluxkit/qubit_model.hpp"

using namespace fluxkit;

namespace {

const double kPi = 3.14159265358979323846;
const double kEulerGamma = 0.57721566490153286;

FluxoniumParams device_g() { return FluxoniumParams{"G", 1.212, 5.315, 0.547}; }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double coth(double x) { return std::cosh(x) / std::sinh(x); }

// Minimal hand-built solution carrying only f01 and the coupling energies,
// for scaling tests where the level structure is irrelevant.
EigenSolution fake_solution(double f01, const FluxoniumParams& p) {
  EigenSolution sol;
  sol.params = p;
  sol.energies = Eigen::Vector4d{0.0, f01, 2.0 * f01, 3.0 * f01};
  return sol;
}

}  // namespace

TEST_CASE("environment and cavity validation") {
  NoiseEnvironment env;
  env.tan_delta_c = -1e-6;
  CHECK_THROWS_AS(env.validate(), validation_error);
  env = NoiseEnvironment{};
  env.temp = -1.0;
  CHECK_THROWS_AS(env.validate(), validation_error);

  CavityParams cav{2.19, 0.223, 6.69, 0.0};
  CHECK_NOTHROW(cav.validate());
  cav.kappa = 0.0;
  CHECK_THROWS_AS(cav.validate(), validation_error);
  cav = CavityParams{2.19, 0.0, 6.69, 0.0};
  CHECK_THROWS_AS(cav.validate(), validation_error);
}

TEST_CASE("dielectric T1 recomputes from the scalar formula") {
  const FluxoniumParams p = device_g();
  const EigenSolution sol = converged_spectrum(p, FluxBias{0.5}, 2, 1e-9);
  const MatrixElements me = matrix_elements(sol, 0, 1);

  NoiseEnvironment env;
  env.tan_delta_c = 2.64e-6;
  env.temp = 0.0187;
  const double f01 = sol.f01();
  const double x = f01 / (2.0 * kb_h_ghz_per_k * env.temp);
  const double rate = kPi * f01 * f01 / (2.0 * p.e_c) * env.tan_delta_c *
                      me.abs_phi_01 * me.abs_phi_01 * coth(x);
  CHECK(rel(t1_dielectric(sol, me, env), 1.0 / (1.0e3 * rate)) < 1e-12);
}

TEST_CASE("dielectric T1 anchors to the 197 MHz device") {
  // Published: f01 = 197 MHz, tan_delta(T=0) = 2.64e-6 reproduces T1 = 1.07 ms
  // at the sweet spot. The model value lands within a factor 1.5.
  const EigenSolution sol = converged_spectrum(device_g(), FluxBias{0.5}, 2, 1e-9);
  const MatrixElements me = matrix_elements(sol, 0, 1);
  CHECK(rel(sol.f01(), 0.197) < 0.05);

  NoiseEnvironment env;
  env.tan_delta_c = 2.64e-6;
  const double t1 = t1_dielectric(sol, me, env);
  CHECK(t1 / 1070.0 > 1.0 / 1.5);
  CHECK(t1 / 1070.0 < 1.5);

  // Finite temperature at 18.7 mK: coth factor near 4 for this low f01.
  const double x = sol.f01() / (2.0 * kb_h_ghz_per_k * 0.0187);
  CHECK(coth(x) > 3.0);
  CHECK(coth(x) < 5.0);
  env.temp = 0.0187;
  CHECK(rel(t1_dielectric(sol, me, env), t1 / coth(x)) < 1e-12);
}

TEST_CASE("dielectric T1 monotonicity") {
  const EigenSolution sol = converged_spectrum(device_g(), FluxBias{0.5}, 2, 1e-9);
  const MatrixElements me = matrix_elements(sol, 0, 1);
  NoiseEnvironment env;
  env.tan_delta_c = 1e-6;
  const double base = t1_dielectric(sol, me, env);
  env.tan_delta_c = 2e-6;
  CHECK(rel(t1_dielectric(sol, me, env), base / 2.0) < 1e-12);  // linear in loss
  env.temp = 0.030;
  const double warm = t1_dielectric(sol, me, env);
  env.temp = 0.015;
  CHECK(warm < t1_dielectric(sol, me, env));  // hotter is shorter
}

TEST_CASE("loss exponent rescales the effective tangent") {
  const EigenSolution sol = converged_spectrum(device_g(), FluxBias{0.5}, 2, 1e-9);
  const MatrixElements me = matrix_elements(sol, 0, 1);
  NoiseEnvironment flat, tilted;
  flat.tan_delta_c = tilted.tan_delta_c = 3e-6;
  tilted.loss_exponent = 0.15;
  const double ratio = t1_dielectric(sol, me, flat) / t1_dielectric(sol, me, tilted);
  CHECK(rel(ratio, std::pow(sol.f01(), 0.15)) < 1e-12);
}

TEST_CASE("quasiparticle rate recomputes from the scalar formula") {
  // Off the sweet spot: at phi_ext = 0.5 the sin(phi/2) element vanishes by
  // parity and the JJ channel shuts off entirely.
  const FluxoniumParams p = device_g();
  const EigenSolution sol = converged_spectrum(p, FluxBias{0.48}, 2, 1e-9);
  const MatrixElements me = matrix_elements(sol, 0, 1);
  NoiseEnvironment env;
  env.x_qp = 3e-7;
  env.temp = 0.0187;

  const double f01 = sol.f01();
  const double thermal = 1.0 + std::exp(-f01 / (kb_h_ghz_per_k * env.temp));
  const double jj = me.abs_sin_half_phi_01 * me.abs_sin_half_phi_01 * 16.0 * p.e_j *
                    env.x_qp * std::sqrt(2.0 * env.delta_gap / f01) * thermal;
  const double jja = 0.25 * me.abs_phi_01 * me.abs_phi_01 * 16.0 * p.e_l *
                     env.x_qp * std::sqrt(2.0 * env.delta_gap / f01) * thermal;
  CHECK(rel(t1_quasiparticle(sol, me, env, QpChannel::jj), 1.0e3 * jj) < 1e-12);
  CHECK(rel(t1_quasiparticle(sol, me, env, QpChannel::jja), 1.0e3 * jja) < 1e-12);
  CHECK(t1_quasiparticle(sol, me, env, QpChannel::jj) > 0.0);
}

TEST_CASE("quasiparticle rate scalings") {
  const FluxoniumParams p = device_g();
  MatrixElements me;
  me.abs_sin_half_phi_01 = 0.3;
  me.abs_phi_01 = 2.0;
  NoiseEnvironment env;
  env.x_qp = 1e-6;

  const EigenSolution a = fake_solution(0.2, p);
  const EigenSolution b = fake_solution(0.8, p);
  // Fixed matrix elements: rate scales as f01^(-1/2).
  CHECK(rel(t1_quasiparticle(a, me, env, QpChannel::jj),
            2.0 * t1_quasiparticle(b, me, env, QpChannel::jj)) < 1e-12);
  // Linear in x_qp.
  NoiseEnvironment env2 = env;
  env2.x_qp = 2e-6;
  CHECK(rel(t1_quasiparticle(a, me, env2, QpChannel::jja),
            2.0 * t1_quasiparticle(a, me, env, QpChannel::jja)) < 1e-12);
  // High temperature doubles the rate (stimulated factor -> 2).
  NoiseEnvironment hot = env;
  hot.temp = 1e9;
  CHECK(rel(t1_quasiparticle(a, me, hot, QpChannel::jj),
            2.0 * t1_quasiparticle(a, me, env, QpChannel::jj)) < 1e-9);
  // x_qp = 0 shuts the channel off.
  NoiseEnvironment off;
  CHECK(t1_quasiparticle(a, me, off, QpChannel::jj) == 0.0);
  // Gap below the transition is unphysical here.
  NoiseEnvironment gap = env;
  gap.delta_gap = 0.1;
  CHECK_THROWS_AS(t1_quasiparticle(a, me, gap, QpChannel::jj), validation_error);
}

TEST_CASE("thermal population and its inverse") {
  // 197 MHz at 18.7 mK sits deep in the thermal regime.
  const double b = thermal_population(0.197, 0.0187);
  CHECK(rel(b, 1.0 / (1.0 + std::exp(0.197 / (kb_h_ghz_per_k * 0.0187)))) < 1e-14);
  CHECK(b > 0.35);
  CHECK(b < 0.40);
  CHECK(thermal_population(0.197, 0.0) == 0.0);
  CHECK(rel(effective_temperature(b, 0.197), 0.0187) < 1e-12);
  CHECK(rel(effective_temperature(0.25, 5.0),
            5.0 / (kb_h_ghz_per_k * std::log(3.0))) < 1e-14);
  CHECK_THROWS_AS(effective_temperature(0.0, 0.197), validation_error);
  CHECK_THROWS_AS(effective_temperature(0.5, 0.197), validation_error);
  CHECK_THROWS_AS(effective_temperature(0.7, 0.197), validation_error);
}

TEST_CASE("echo filter coefficient hits the closed form") {
  // For a single echo pulse u = sqrt(ln 2) exactly.
  const double u1 = filter_u_coefficient(SequenceType::cpmg(1));
  CHECK(std::abs(u1 - std::sqrt(std::log(2.0))) < 1e-10);
}

TEST_CASE("CPMG filter coefficients match quadrature references") {
  // Cross-checked against adaptive quadrature of the filter integrand.
  CHECK(std::abs(filter_u_coefficient(SequenceType::cpmg(2)) - 0.6264527) < 1e-4);
  CHECK(std::abs(filter_u_coefficient(SequenceType::cpmg(4)) - 0.4521128) < 1e-4);
  CHECK(std::abs(filter_u_coefficient(SequenceType::cpmg(8)) - 0.3230530) < 1e-4);
  CHECK(std::abs(filter_u_coefficient(SequenceType::cpmg(16)) - 0.2296341) < 1e-4);
}

TEST_CASE("filter coefficient decreases with pulse number") {
  double prev = filter_u_coefficient(SequenceType::cpmg(1));
  for (int n : {2, 4, 8, 16}) {
    const double u = filter_u_coefficient(SequenceType::cpmg(n));
    CHECK(u < prev);
    CHECK(u > 0.0);
    prev = u;
  }
}

TEST_CASE("Ramsey filter coefficient matches the cutoff asymptotics") {
  // With x_min = 2 pi f_cut t the Ramsey filter integral gives
  // u^2 = ln(1/x_min) + 3/2 - gamma_E + x_min^2/24 + O(x_min^4).
  for (double t_us : {10.0, 100.0, 1000.0}) {
    const double x_min = 2.0 * kPi * 1.0 * t_us * 1e-6;
    const double expected =
        std::log(1.0 / x_min) + 1.5 - kEulerGamma + x_min * x_min / 24.0;
    const double u = filter_u_coefficient(SequenceType::ramsey(1.0), t_us);
    CHECK(std::abs(u * u - expected) < 1e-6);
  }
  // Longer evolution sees less of the low-frequency divergence.
  CHECK(filter_u_coefficient(SequenceType::ramsey(), 100.0) <
        filter_u_coefficient(SequenceType::ramsey(), 10.0));
  // Ramsey always exceeds echo.
  CHECK(filter_u_coefficient(SequenceType::ramsey(), 1000.0) >
        filter_u_coefficient(SequenceType::cpmg(1)));
  // The time argument is mandatory for Ramsey.
  CHECK_THROWS_AS(filter_u_coefficient(SequenceType::ramsey()), validation_error);
}

TEST_CASE("sequence naming") {
  CHECK(SequenceType::ramsey().name() == "ramsey");
  CHECK(SequenceType::cpmg(1).name() == "cpmg1");
  CHECK(SequenceType::cpmg(8).name() == "cpmg8");
  CHECK_THROWS_AS(SequenceType::cpmg(0), validation_error);
}

TEST_CASE("dephasing envelope composition") {
  const SequenceType echo = SequenceType::cpmg(1);
  NoiseEnvironment env;

  // All dephasing channels off: pure T1 decay of the coherence.
  CHECK(rel(dephasing_envelope(echo, 0.5, env, 30.0, 100.0),
            std::exp(-30.0 / 200.0)) < 1e-12);
  CHECK(dephasing_envelope(echo, 0.5, env, 0.0, 100.0) == 1.0);

  // White flux noise multiplies in exp(-Gamma_w t), Gamma_w = D^2 a_w^2 / 2.
  env.a_white = 0.3;
  const double d = 0.7;
  const double gamma_w = 0.5 * d * d * env.a_white * env.a_white;
  CHECK(rel(dephasing_envelope(echo, d, env, 20.0, 100.0),
            std::exp(-20.0 / 200.0 - gamma_w * 20.0)) < 1e-12);

  // 1/f flux noise contributes the Gaussian factor exp[-(1e-3 t D A u)^2].
  env.a_white = 0.0;
  env.a_phi = 2.43;
  const double u = filter_u_coefficient(echo);
  const double g = 1e-3 * 20.0 * d * env.a_phi * u;
  CHECK(rel(dephasing_envelope(echo, d, env, 20.0, 100.0),
            std::exp(-20.0 / 200.0 - g * g)) < 1e-12);

  // Zero dispersion disables both flux channels.
  env.a_white = 0.5;
  CHECK(rel(dephasing_envelope(echo, 0.0, env, 20.0, 100.0),
            std::exp(-20.0 / 200.0)) < 1e-12);

  CHECK_THROWS_AS(dephasing_envelope(echo, d, env, -1.0, 100.0), validation_error);
  CHECK_THROWS_AS(dephasing_envelope(echo, d, env, 1.0, 0.0), validation_error);
}

TEST_CASE("dephasing envelope is bounded and decreasing") {
  NoiseEnvironment env;
  env.a_phi = 2.43;
  env.a_white = 0.1;
  double prev = 1.0;
  for (double t : {5.0, 10.0, 20.0, 40.0, 80.0}) {
    const double v = dephasing_envelope(SequenceType::cpmg(2), 0.9, env, t, 500.0);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("photon shot dephasing round trips through n_bar") {
  CavityParams cav{2.19, 0.223, 6.69, 4.2e-3};
  const double gamma = photon_shot_dephasing(cav);
  const double scalar =
      cav.n_bar * 2.0 * kPi * cav.kappa / (1.0 + (cav.kappa * cav.kappa) /
                                                     (cav.chi * cav.chi));
  CHECK(rel(gamma, scalar) < 1e-12);
  CHECK(rel(n_bar_from_dephasing(gamma, cav), cav.n_bar) < 1e-12);
  cav.n_bar = 0.0;
  CHECK(photon_shot_dephasing(cav) == 0.0);
}

TEST_CASE("photon shot anchors to the 197 MHz device coherence budget") {
  // T1 = 1.07 ms and T2 = 0.943 ms leave Gamma_phi = 1/T2 - 1/(2 T1); the
  // published cavity (kappa = 2.19 MHz, chi = 0.223 MHz) then implies
  // n_bar ~ 4e-3 and a cavity temperature near 59 mK.
  const double t1 = 1070.0, t2 = 943.0;
  const double gamma_phi = 1.0 / t2 - 1.0 / (2.0 * t1);
  CHECK(rel(1.0 / gamma_phi, 1685.9) < 1e-3);

  const CavityParams cav{2.19, 0.223, 6.69, 0.0};
  const double n_bar = n_bar_from_dephasing(gamma_phi, cav);
  CHECK(n_bar / 4.0e-3 > 0.90);
  CHECK(n_bar / 4.0e-3 < 1.10);

  const double temp = cavity_temperature(n_bar, cav.f_cavity);
  CHECK(std::abs(temp - 0.059) < 0.002);
  // Inversion consistency with the Bose occupation.
  const double occ = 1.0 / (std::exp(cav.f_cavity / (kb_h_ghz_per_k * temp)) - 1.0);
  CHECK(rel(occ, n_bar) < 1e-10);
  CHECK_THROWS_AS(cavity_temperature(0.0, 6.69), validation_error);
}

TEST_CASE("zeta normalization and the dielectric band model") {
  const EigenSolution sol = converged_spectrum(device_g(), FluxBias{0.5}, 2, 1e-9);
  const MatrixElements me = matrix_elements(sol, 0, 1);
  const double z = zeta(1070.0, me, sol.params);
  CHECK(rel(z, 1070.0 * me.abs_phi_01 * me.abs_phi_01 / 1.212) < 1e-14);
  CHECK(rel(zeta(2140.0, me, sol.params), 2.0 * z) < 1e-14);

  // T = 0, flat loss: zeta * f01^2 is constant across the band.
  NoiseEnvironment env;
  env.tan_delta_c = 2.5e-6;
  const double c0 = zeta_dielectric_model(0.15, env) * 0.15 * 0.15;
  for (double f : {0.25, 0.45, 0.65, 0.95})
    CHECK(rel(zeta_dielectric_model(f, env) * f * f, c0) < 1e-12);

  // Doubling the loss tangent halves zeta.
  NoiseEnvironment env2 = env;
  env2.tan_delta_c = 5e-6;
  CHECK(rel(zeta_dielectric_model(0.4, env2),
            0.5 * zeta_dielectric_model(0.4, env)) < 1e-12);

  // Finite temperature bends the band down at low frequency.
  NoiseEnvironment warm = env;
  warm.temp = 0.020;
  CHECK(zeta_dielectric_model(0.15, warm) < zeta_dielectric_model(0.15, env));
}

TEST_CASE("flux noise relaxation coefficient scalar check") {
  const double two_pi = 2.0 * kPi;
  const double expect = std::pow(two_pi, 4) * 0.547 * 0.547 * 2.43 * 2.43 * 1e-9 / 0.197;
  CHECK(rel(flux_noise_rate_coeff(0.197, 0.547, 2.43), expect) < 1e-12);
  // Quadratic in the amplitude, inverse in frequency.
  CHECK(rel(flux_noise_rate_coeff(0.197, 0.547, 4.86),
            4.0 * flux_noise_rate_coeff(0.197, 0.547, 2.43)) < 1e-12);
  CHECK(rel(flux_noise_rate_coeff(0.394, 0.547, 2.43),
            0.5 * flux_noise_rate_coeff(0.197, 0.547, 2.43)) < 1e-12);
}
