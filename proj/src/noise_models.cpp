// noise_models.cpp: decoherence channel forward models
#include "fluxkit/noise_models.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "fluxkit/constants.hpp"
#include "fluxkit/errors.hpp"

namespace fluxkit {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 2.0 * kPi;

// coth(f01 / (2 kb_h T)); exactly 1 for T = 0 (TLS bath) and in the T -> 0 limit.
double coth_factor(double f01, double temp_k) {
  if (temp_k == 0.0) return 1.0;
  const double x = f01 / (2.0 * kb_h_ghz_per_k * temp_k);
  return 1.0 / std::tanh(x);
}

// 15-point Gauss-Kronrod abscissae/weights on [-1, 1].
constexpr double kGkX[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kGkW[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};

// Fractional pulse times: 0, (k - 1/2)/N, 1. Ramsey is just {0, 1}.
std::vector<double> sequence_nodes(const SequenceType& seq) {
  std::vector<double> c{0.0};
  for (int k = 1; k <= seq.n_pulses; ++k)
    c.push_back((k - 0.5) / seq.n_pulses);
  c.push_back(1.0);
  return c;
}

// g(x) = |sum_j (-1)^j (e^{ix c_{j+1}} - e^{ix c_j})|^2 / x^2, the filter
// function of the toggling frame against dimensionless x = omega t.
double filter_g(double x, const std::vector<double>& c) {
  std::complex<double> p(0.0, 0.0);
  double sgn = 1.0;
  for (std::size_t j = 0; j + 1 < c.size(); ++j) {
    p += sgn * (std::polar(1.0, x * c[j + 1]) - std::polar(1.0, x * c[j]));
    sgn = -sgn;
  }
  return std::norm(p) / (x * x);
}

// Integral of g(x)/x over [x_min, X] plus the analytic oscillation-averaged
// tail mean_p2/(2 X^2). Panels: geometric (factor 2) below pi to resolve the
// near-cutoff 1/x region, pi-length panels above.
double u_squared(const std::vector<double>& c, double x_min, double x_max,
                 double mean_p2) {
  std::vector<double> edges{x_min};
  double a = x_min;
  while (2.0 * a < kPi && a < x_max) {
    a *= 2.0;
    edges.push_back(std::min(a, x_max));
  }
  if (edges.back() < x_max) {
    double e = std::max(edges.back(), kPi);
    if (e > edges.back()) edges.push_back(std::min(e, x_max));
    while (edges.back() < x_max)
      edges.push_back(std::min(edges.back() + kPi, x_max));
  }
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double lo = edges[s], hi = edges[s + 1];
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double seg = 0.0;
    for (int k = 0; k < 15; ++k) {
      const double x = mid + half * kGkX[k];
      seg += kGkW[k] * filter_g(x, c) / x;
    }
    total += half * seg;
  }
  return total + mean_p2 / (2.0 * x_max * x_max);
}

}  // namespace

// ---- domain type validation ----

void NoiseEnvironment::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw validation_error(std::string(name) + " must be nonnegative and finite");
  };
  nonneg(tan_delta_c, "tan_delta_c");
  nonneg(temp, "temp");
  nonneg(a_phi, "a_phi");
  nonneg(a_white, "a_white");
  nonneg(x_qp, "x_qp");
  if (!std::isfinite(loss_exponent)) throw validation_error("loss_exponent must be finite");
  if (!(delta_gap > 0.0)) throw validation_error("delta_gap must be positive");
}

void CavityParams::validate() const {
  if (!(kappa > 0.0)) throw validation_error("kappa must be positive");
  if (chi == 0.0 || !std::isfinite(chi)) throw validation_error("chi must be nonzero");
  if (!(f_cavity > 0.0)) throw validation_error("f_cavity must be positive");
  if (!(n_bar >= 0.0)) throw validation_error("n_bar must be nonnegative");
}

SequenceType SequenceType::ramsey(double cutoff_hz) {
  if (!(cutoff_hz > 0.0)) throw validation_error("ramsey cutoff must be positive");
  SequenceType s;
  s.n_pulses = 0;
  s.ramsey_cutoff_hz = cutoff_hz;
  return s;
}

SequenceType SequenceType::cpmg(int n) {
  if (n < 1) throw validation_error("cpmg pulse count must be >= 1");
  SequenceType s;
  s.n_pulses = n;
  return s;
}

std::string SequenceType::name() const {
  if (is_ramsey()) return "ramsey";
  return "cpmg" + std::to_string(n_pulses);
}

// ---- relaxation channels ----

double t1_dielectric(const EigenSolution& sol, const MatrixElements& elems,
                     const NoiseEnvironment& env) {
  env.validate();
  const double f01 = sol.f01();
  if (!(f01 > 0.0)) throw validation_error("t1_dielectric requires f01 > 0");
  const double tan_eff = env.tan_delta_c * std::pow(f01, env.loss_exponent);
  const double rate_ghz = kPi * f01 * f01 / (2.0 * sol.params.e_c) * tan_eff *
                          elems.abs_phi_01 * elems.abs_phi_01 *
                          coth_factor(f01, env.temp);
  return 1.0 / (1.0e3 * rate_ghz);  // GHz -> 1/us, then invert
}

double t1_quasiparticle(const EigenSolution& sol, const MatrixElements& elems,
                        const NoiseEnvironment& env, QpChannel channel) {
  env.validate();
  const double f01 = sol.f01();
  if (!(f01 > 0.0)) throw validation_error("t1_quasiparticle requires f01 > 0");
  if (!(env.delta_gap > f01))
    throw validation_error("t1_quasiparticle requires delta_gap > f01");
  double coupling;  // |matrix element|^2 * 8 E / (hbar pi), in GHz
  if (channel == QpChannel::jj) {
    coupling = elems.abs_sin_half_phi_01 * elems.abs_sin_half_phi_01 * 16.0 *
               sol.params.e_j;
  } else {
    const double half_phi = 0.5 * elems.abs_phi_01;
    coupling = half_phi * half_phi * 16.0 * sol.params.e_l;
  }
  double thermal = 1.0;
  if (env.temp > 0.0) thermal += std::exp(-f01 / (kb_h_ghz_per_k * env.temp));
  const double rate_ghz =
      coupling * env.x_qp * std::sqrt(2.0 * env.delta_gap / f01) * thermal;
  return 1.0e3 * rate_ghz;  // 1/us
}

// ---- thermal population ----

double thermal_population(double f01, double temp_k) {
  if (!(f01 > 0.0)) throw validation_error("thermal_population requires f01 > 0");
  if (!(temp_k >= 0.0)) throw validation_error("temperature must be nonnegative");
  if (temp_k == 0.0) return 0.0;
  return 1.0 / (1.0 + std::exp(f01 / (kb_h_ghz_per_k * temp_k)));
}

double effective_temperature(double b, double f01) {
  if (!(f01 > 0.0)) throw validation_error("effective_temperature requires f01 > 0");
  if (!(b > 0.0) || !(b < 0.5))
    throw validation_error("excited fraction must lie in (0, 0.5)");
  return f01 / (kb_h_ghz_per_k * std::log(1.0 / b - 1.0));
}

// ---- dephasing ----

double filter_u_coefficient(const SequenceType& seq, std::optional<double> t_us) {
  double x_min;
  std::vector<double> nodes;
  double mean_p2;
  if (seq.is_ramsey()) {
    if (!t_us || !(*t_us > 0.0))
      throw validation_error("ramsey u coefficient requires t > 0");
    if (!(seq.ramsey_cutoff_hz > 0.0))
      throw validation_error("ramsey cutoff must be positive");
    x_min = kTwoPi * seq.ramsey_cutoff_hz * (*t_us) * 1e-6;  // omega_cut * t
    nodes = {0.0, 1.0};
    mean_p2 = 2.0;
  } else {
    if (seq.n_pulses < 1) throw validation_error("cpmg pulse count must be >= 1");
    x_min = 1e-8;  // integrand ~ x near 0; [0, x_min] contributes O(x_min^2)
    nodes = sequence_nodes(seq);
    mean_p2 = 4.0 * seq.n_pulses + 2.0;
  }
  const double x_max = 2000.0 * kPi;
  if (!(x_min < x_max))
    throw validation_error("filter integration window is empty (t too large)");
  const double full = u_squared(nodes, x_min, x_max, mean_p2);
  const double half = u_squared(nodes, x_min, 0.5 * x_max, mean_p2);
  const double u = std::sqrt(full);
  if (std::abs(u - std::sqrt(half)) > 1e-6)
    throw solver_error("filter u quadrature failed its 1e-6 stability check");
  return u;
}

double dephasing_envelope(const SequenceType& seq, double d_coeff,
                          const NoiseEnvironment& env, double t_us, double t1_us) {
  env.validate();
  if (t_us < 0.0) throw validation_error("dephasing_envelope requires t >= 0");
  if (!(t1_us > 0.0)) throw validation_error("dephasing_envelope requires t1 > 0");
  if (t_us == 0.0) return 1.0;
  double log_env = -t_us / (2.0 * t1_us);
  const double gamma_w = 0.5 * d_coeff * d_coeff * env.a_white * env.a_white;
  log_env -= gamma_w * t_us;
  if (env.a_phi > 0.0 && d_coeff != 0.0) {
    const double u = filter_u_coefficient(seq, t_us);
    const double arg = 1e-3 * t_us * d_coeff * env.a_phi * u;
    log_env -= arg * arg;
  }
  return std::exp(log_env);
}

// ---- photon shot noise ----

double photon_shot_dephasing(const CavityParams& cav) {
  cav.validate();
  const double ratio = cav.kappa / cav.chi;
  return cav.n_bar * kTwoPi * cav.kappa / (1.0 + ratio * ratio);  // 1/us
}

double n_bar_from_dephasing(double gamma_phi_per_us, const CavityParams& cav) {
  cav.validate();
  if (!(gamma_phi_per_us >= 0.0))
    throw validation_error("dephasing rate must be nonnegative");
  const double ratio = cav.kappa / cav.chi;
  return gamma_phi_per_us * (1.0 + ratio * ratio) / (kTwoPi * cav.kappa);
}

double cavity_temperature(double n_bar, double f_cavity) {
  if (!(n_bar > 0.0))
    throw validation_error("cavity temperature undefined for n_bar <= 0");
  if (!(f_cavity > 0.0)) throw validation_error("f_cavity must be positive");
  return f_cavity / (kb_h_ghz_per_k * std::log(1.0 + 1.0 / n_bar));
}

// ---- zeta normalization ----

double zeta(double t1_us, const MatrixElements& elems, const FluxoniumParams& params) {
  params.validate();
  if (!(t1_us > 0.0)) throw validation_error("zeta requires t1 > 0");
  return t1_us * elems.abs_phi_01 * elems.abs_phi_01 / params.e_c;
}

double zeta_dielectric_model(double f01, const NoiseEnvironment& env) {
  env.validate();
  if (!(f01 > 0.0)) throw validation_error("zeta model requires f01 > 0");
  const double tan_eff = env.tan_delta_c * std::pow(f01, env.loss_exponent);
  if (!(tan_eff > 0.0)) throw validation_error("zeta model requires tan_delta_c > 0");
  return 2.0e-3 / (kPi * f01 * f01 * tan_eff * coth_factor(f01, env.temp));
}

double flux_noise_rate_coeff(double f01, double e_l, double a_phi) {
  if (!(f01 > 0.0)) throw validation_error("flux_noise_rate_coeff requires f01 > 0");
  const double w = kTwoPi;
  return w * w * w * w * e_l * e_l * a_phi * a_phi * 1e-9 / f01;
}

}  // namespace fluxkit
