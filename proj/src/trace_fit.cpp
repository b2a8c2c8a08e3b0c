// trace_fit.cpp: time-domain trace fitters
#include "fluxkit/trace_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fluxkit/constants.hpp"
#include "fluxkit/errors.hpp"
#include "nlfit.hpp"

namespace fluxkit {

namespace {

using detail::NlFitOutcome;
using detail::NlFitProblem;

// Per-point standard deviations: binomial when shot counts are present,
// unit weights otherwise.
std::vector<double> trace_sigmas(const DecayTrace& tr) {
  std::vector<double> sig(tr.size(), 1.0);
  if (tr.shots.empty()) return sig;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double p = std::clamp(tr.p1[i], 1e-3, 1.0 - 1e-3);
    sig[i] = std::max(std::sqrt(p * (1.0 - p) / tr.shots[i]), 1e-6);
  }
  return sig;
}

double trace_span(const DecayTrace& tr) {
  const double s = tr.delays.back() - tr.delays.front();
  return s > 0.0 ? s : 1.0;
}

// Log-linear tail regression seed for a decay time constant; falls back to the
// span when the tail is not usable.
double regression_t1_seed(const DecayTrace& tr) {
  const double b0 = *std::min_element(tr.p1.begin(), tr.p1.end());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double y = std::abs(tr.p1[i] - b0);
    if (y < 1e-6) continue;
    const double ly = std::log(y);
    sx += tr.delays[i];
    sy += ly;
    sxx += tr.delays[i] * tr.delays[i];
    sxy += tr.delays[i] * ly;
    ++m;
  }
  const double span = trace_span(tr);
  if (m < 2) return span;
  const double denom = m * sxx - sx * sx;
  if (denom <= 0.0) return span;
  const double slope = (m * sxy - sx * sy) / denom;
  if (!(slope < -1e-12)) return span;
  const double t1 = -1.0 / slope;
  return std::clamp(t1, 1e-3 * span, 1e3 * span);
}

// Deterministic multi-start grid over a decay time: the regression seed plus
// log-spaced multiples of the measurement span.
std::vector<double> time_constant_starts(const DecayTrace& tr) {
  const double span = trace_span(tr);
  std::vector<double> t = {regression_t1_seed(tr)};
  for (double mul : {0.05, 0.15, 0.5, 1.5, 5.0, 15.0, 50.0}) t.push_back(mul * span);
  return t;
}

bool is_constant_trace(const DecayTrace& tr) {
  const auto [lo, hi] = std::minmax_element(tr.p1.begin(), tr.p1.end());
  return (*hi - *lo) < 1e-12;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

double linear_slope(const DecayTrace& tr) {
  const double tbar = mean_of(tr.delays), pbar = mean_of(tr.p1);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    num += (tr.delays[i] - tbar) * (tr.p1[i] - pbar);
    den += (tr.delays[i] - tbar) * (tr.delays[i] - tbar);
  }
  return den > 0 ? num / den : 0.0;
}

FitParam param_of(const NlFitOutcome& o, int i) { return {o.params[i], o.stderrs[i]}; }

// Parameter and error for a log-parameterized positive quantity.
FitParam exp_param_of(const NlFitOutcome& o, int i) {
  const double v = std::exp(o.params[i]);
  return {v, v * o.stderrs[i]};
}

}  // namespace

// ---- domain types ----

DecayTrace DecayTrace::from_measurement(std::vector<double> delays,
                                        std::vector<double> p1, std::vector<int> shots,
                                        InitLabel init) {
  DecayTrace tr;
  tr.delays = std::move(delays);
  tr.p1 = std::move(p1);
  tr.shots = std::move(shots);
  tr.init_label = init;
  tr.validate_grid();
  for (double p : tr.p1)
    if (!(p >= 0.0 && p <= 1.0))
      throw validation_error("trace probability outside [0, 1]");
  if (!tr.shots.empty()) {
    if (tr.shots.size() != tr.delays.size())
      throw validation_error("shots column length mismatch");
    for (int s : tr.shots)
      if (s <= 0) throw validation_error("shot counts must be positive");
  }
  return tr;
}

void DecayTrace::validate_grid() const {
  if (delays.size() != p1.size())
    throw validation_error("trace column length mismatch");
  if (delays.empty()) throw validation_error("empty trace");
  for (std::size_t i = 0; i + 1 < delays.size(); ++i)
    if (!(delays[i] < delays[i + 1]))
      throw validation_error("trace delays must be strictly ascending");
  for (double t : delays)
    if (!std::isfinite(t)) throw validation_error("trace delay not finite");
}

void DephasingTriple::validate() const {
  phase_0.validate_grid();
  phase_60.validate_grid();
  phase_120.validate_grid();
  if (phase_0.delays != phase_60.delays || phase_0.delays != phase_120.delays)
    throw validation_error("dephasing triple requires identical delay grids");
}

// ---- exponential ----

FitResult fit_exponential(const DecayTrace& trace) {
  trace.validate_grid();
  if (trace.size() < 4)
    throw validation_error("fit_exponential requires at least 4 points");

  FitResult res;
  res.model_id = "exponential";
  res.n_points = static_cast<int>(trace.size());

  if (is_constant_trace(trace)) {
    const double b = mean_of(trace.p1);
    res.parameters["a"] = {0.0, 0.0};
    res.parameters["b"] = {b, 0.0};
    res.converged = true;
    res.notes.push_back("degenerate: constant trace, offset-only fit");
    return res;
  }

  const auto sig = trace_sigmas(trace);
  NlFitProblem prob;
  prob.n_residuals = static_cast<int>(trace.size());
  prob.n_params = 3;  // a, ln T1, b
  prob.residuals = [&](const double* x, double* r) {
    const double a = x[0], t1 = std::exp(x[1]), b = x[2];
    for (std::size_t i = 0; i < trace.size(); ++i)
      r[i] = (a * std::exp(-trace.delays[i] / t1) + b - trace.p1[i]) / sig[i];
  };

  const double a0 = trace.p1.front() - trace.p1.back();
  const double b0 = trace.p1.back();
  std::vector<std::vector<double>> starts;
  for (double t1 : time_constant_starts(trace))
    starts.push_back({a0, std::log(t1), b0});

  const auto best = detail::nlfit_best(prob, starts);
  if (!best) throw fit_error("exponential fit did not converge");

  res.parameters["a"] = param_of(*best, 0);
  res.parameters["t1_us"] = exp_param_of(*best, 1);
  res.parameters["b"] = param_of(*best, 2);
  res.residual_norm = std::sqrt(best->cost);
  res.converged = true;
  return res;
}

// ---- joint T1 ----

FitResult fit_joint_t1(const DecayTrace& trace_from_1, const DecayTrace& trace_from_0,
                       std::optional<double> f01, std::optional<double> fix_b) {
  trace_from_1.validate_grid();
  trace_from_0.validate_grid();
  if (trace_from_1.size() < 4 || trace_from_0.size() < 4)
    throw validation_error("fit_joint_t1 requires at least 4 points per trace");
  if (trace_from_1.init_label != InitLabel::none &&
      trace_from_1.init_label == trace_from_0.init_label)
    throw validation_error("fit_joint_t1 requires distinct initialization labels");

  FitResult res;
  res.model_id = "joint_t1";
  res.n_points = static_cast<int>(trace_from_1.size() + trace_from_0.size());
  if (trace_from_1.delays == trace_from_0.delays && trace_from_1.p1 == trace_from_0.p1)
    res.notes.push_back("identical traces: amplitude split is ill-conditioned");

  const auto sig1 = trace_sigmas(trace_from_1);
  const auto sig0 = trace_sigmas(trace_from_0);
  const bool free_b = !fix_b.has_value();
  const int np = free_b ? 4 : 3;  // a1, a2, ln T1 [, b]

  NlFitProblem prob;
  prob.n_residuals = res.n_points;
  prob.n_params = np;
  prob.residuals = [&](const double* x, double* r) {
    const double a1 = x[0], a2 = x[1], t1 = std::exp(x[2]);
    const double b = free_b ? x[3] : *fix_b;
    std::size_t k = 0;
    for (std::size_t i = 0; i < trace_from_1.size(); ++i, ++k)
      r[k] = (a1 * std::exp(-trace_from_1.delays[i] / t1) + b - trace_from_1.p1[i]) /
             sig1[i];
    for (std::size_t i = 0; i < trace_from_0.size(); ++i, ++k)
      r[k] = (a2 * std::exp(-trace_from_0.delays[i] / t1) + b - trace_from_0.p1[i]) /
             sig0[i];
  };

  const double a1_0 = trace_from_1.p1.front() - trace_from_1.p1.back();
  const double a2_0 = trace_from_0.p1.front() - trace_from_0.p1.back();
  const double b0 = free_b
                        ? 0.5 * (trace_from_1.p1.back() + trace_from_0.p1.back())
                        : *fix_b;
  std::vector<std::vector<double>> starts;
  for (double t1 : time_constant_starts(trace_from_1)) {
    std::vector<double> s = {a1_0, a2_0, std::log(t1)};
    if (free_b) s.push_back(b0);
    starts.push_back(std::move(s));
  }

  const auto best = detail::nlfit_best(prob, starts);
  if (!best) throw fit_error("joint T1 fit did not converge");

  res.parameters["a1"] = param_of(*best, 0);
  res.parameters["a2"] = param_of(*best, 1);
  res.parameters["t1_us"] = exp_param_of(*best, 2);
  const FitParam bp = free_b ? param_of(*best, 3) : FitParam{*fix_b, 0.0};
  res.parameters["b"] = bp;
  res.residual_norm = std::sqrt(best->cost);
  res.converged = true;

  if (f01) {
    if (bp.value > 0.0 && bp.value < 0.5) {
      const double t_k = effective_temperature(bp.value, *f01);
      const double l = std::log(1.0 / bp.value - 1.0);
      const double dt_db =
          *f01 / (kb_h_ghz_per_k * l * l) / (bp.value * (1.0 - bp.value));
      res.parameters["temp_mk"] = {1e3 * t_k, 1e3 * std::abs(dt_db) * bp.stderr_};
    } else {
      res.notes.push_back("offset outside (0, 0.5): no effective temperature");
    }
  }
  return res;
}

// ---- Bloch envelope ----

DecayTrace bloch_envelope(const DephasingTriple& triple) {
  triple.validate();
  const double root3 = std::sqrt(3.0);
  DecayTrace env;
  env.delays = triple.phase_0.delays;
  env.p1.resize(env.delays.size());
  for (std::size_t i = 0; i < env.delays.size(); ++i) {
    const double p0 = triple.phase_0.p1[i];
    const double p1 = triple.phase_60.p1[i];
    const double p2 = triple.phase_120.p1[i];
    // p_k = c + X cos(phi_k) + Y sin(phi_k), phi_k in {0, 60, 120} deg
    const double x = p1 - p2;
    const double c = p0 - x;
    const double y = (p1 + p2 - 2.0 * c) / root3;
    env.p1[i] = std::hypot(x, y);
  }
  return env;
}

// ---- Gaussian dephasing ----

FitResult fit_gaussian_dephasing(const DecayTrace& envelope, double t1_ref_us,
                                 const SequenceType& seq, bool include_white,
                                 bool pure_exponential) {
  envelope.validate_grid();
  if (envelope.size() < 4)
    throw validation_error("fit_gaussian_dephasing requires at least 4 points");
  if (!(t1_ref_us > 0.0))
    throw validation_error("fit_gaussian_dephasing requires t1_ref > 0");

  FitResult res;
  res.model_id =
      std::string(pure_exponential ? "dephasing_exp_" : "dephasing_gauss_") + seq.name();
  res.n_points = static_cast<int>(envelope.size());
  if (linear_slope(envelope) > 0.0)
    res.notes.push_back("envelope increases with delay");

  const auto sig = trace_sigmas(envelope);
  const double a0 = std::max(envelope.p1.front(), 0.1);

  // 1/e crossing seed for the decay time.
  double t_dec = trace_span(envelope);
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    if (envelope.p1[i] < a0 * 0.3678794411714423) {
      t_dec = std::max(envelope.delays[i], 1e-3 * trace_span(envelope));
      break;
    }
  }

  std::vector<double> t_starts = {t_dec};
  for (double mul : {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0})
    t_starts.push_back(mul * trace_span(envelope));

  NlFitProblem prob;
  std::vector<std::vector<double>> starts;
  if (pure_exponential) {
    prob.n_params = 2;  // a, ln t2
    prob.n_residuals = res.n_points;
    prob.residuals = [&](const double* x, double* r) {
      const double a = x[0], t2 = std::exp(x[1]);
      for (std::size_t i = 0; i < envelope.size(); ++i)
        r[i] = (a * std::exp(-envelope.delays[i] / t2) - envelope.p1[i]) / sig[i];
    };
    for (double t : t_starts) starts.push_back({a0, std::log(t)});
  } else {
    prob.n_params = include_white ? 3 : 2;  // a, ln Tphi [, Gamma_w]
    prob.n_residuals = res.n_points;
    prob.residuals = [&](const double* x, double* r) {
      const double a = x[0], tphi = std::exp(x[1]);
      const double gw = include_white ? x[2] : 0.0;
      for (std::size_t i = 0; i < envelope.size(); ++i) {
        const double t = envelope.delays[i];
        const double m = a * std::exp(-t / (2.0 * t1_ref_us) - gw * t -
                                      (t / tphi) * (t / tphi));
        r[i] = (m - envelope.p1[i]) / sig[i];
      }
    };
    for (double t : t_starts) {
      std::vector<double> s = {a0, std::log(t)};
      if (include_white) s.push_back(0.0);
      starts.push_back(std::move(s));
    }
  }

  const auto best = detail::nlfit_best(prob, starts);
  if (!best) throw fit_error("dephasing fit did not converge");

  res.parameters["a"] = param_of(*best, 0);
  if (pure_exponential) {
    res.parameters["t2_us"] = exp_param_of(*best, 1);
  } else {
    res.parameters["tphi_us"] = exp_param_of(*best, 1);
    if (include_white) {
      res.parameters["gamma_w_per_us"] = param_of(*best, 2);
      if (best->params[2] < 0.0)
        res.notes.push_back("fitted white rate is negative (consistent with 0)");
    }
  }
  res.residual_norm = std::sqrt(best->cost);
  res.converged = true;
  return res;
}

// ---- non-exponential ----

FitResult fit_nonexponential(const DecayTrace& trace) {
  trace.validate_grid();
  if (trace.size() < 6)
    throw validation_error("fit_nonexponential requires at least 6 points");

  const FitResult expo = fit_exponential(trace);
  FitResult res;
  res.model_id = "nonexponential";
  res.n_points = static_cast<int>(trace.size());
  res.exp_residual_norm = expo.residual_norm;

  auto pin_to_exponential = [&]() {
    res.parameters["a"] = expo.has("a") ? expo.parameters.at("a") : FitParam{};
    res.parameters["n"] = {0.0, 0.0};
    if (expo.has("t1_us")) res.parameters["t1_us"] = expo.parameters.at("t1_us");
    res.parameters["b"] = expo.has("b") ? expo.parameters.at("b") : FitParam{};
    res.residual_norm = expo.residual_norm;
    res.converged = expo.converged;
    res.notes.push_back("n pinned to 0: no non-exponential structure identified");
    return res;
  };

  if (!expo.has("t1_us")) return pin_to_exponential();  // degenerate constant trace

  const auto sig = trace_sigmas(trace);
  NlFitProblem prob;
  prob.n_residuals = res.n_points;
  prob.n_params = 5;  // a, n, ln T1_tilde, ln T1, b
  prob.residuals = [&](const double* x, double* r) {
    const double a = x[0], n = x[1], tt = std::exp(x[2]), t1 = std::exp(x[3]),
                 b = x[4];
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const double t = trace.delays[i];
      const double m =
          a * std::exp(n * (std::exp(-t / tt) - 1.0)) * std::exp(-t / t1) + b;
      r[i] = (m - trace.p1[i]) / sig[i];
    }
  };

  const double a_e = expo.value("a");
  const double t1_e = expo.value("t1_us");
  const double b_e = expo.value("b");
  const double span = trace_span(trace);
  std::vector<std::vector<double>> starts;
  for (double n0 : {1e-3, 0.6, 1.2, 2.4})
    for (double tt0 : {span / 10.0, span / 3.0})
      starts.push_back({a_e, n0, std::log(tt0), std::log(t1_e), b_e});

  const auto best = detail::nlfit_best(prob, starts);
  const double exp_cost = expo.residual_norm * expo.residual_norm;
  if (!best || best->cost > exp_cost * (1.0 + 1e-9) + 1e-15)
    return pin_to_exponential();
  if (std::abs(best->params[1]) < 1e-4) return pin_to_exponential();

  res.parameters["a"] = param_of(*best, 0);
  res.parameters["n"] = param_of(*best, 1);
  res.parameters["t1_tilde_us"] = exp_param_of(*best, 2);
  res.parameters["t1_us"] = exp_param_of(*best, 3);
  res.parameters["b"] = param_of(*best, 4);
  res.residual_norm = std::sqrt(best->cost);
  res.converged = true;
  return res;
}

}  // namespace fluxkit
