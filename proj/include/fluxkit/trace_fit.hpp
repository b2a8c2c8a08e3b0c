// trace_fit.hpp: least-squares fitting of time-domain measurement traces
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fluxkit/noise_models.hpp"

namespace fluxkit {

// ---- domain types ----

enum class InitLabel { from_0, from_1, none };

struct DecayTrace {
  std::vector<double> delays;        // us, strictly ascending
  std::vector<double> p1;            // excited-state probability per delay
  std::vector<int> shots;            // optional (empty or same length, all > 0)
  InitLabel init_label = InitLabel::none;

  // Named constructor for measurement data: enforces ascending delays, equal
  // lengths, p1 within [0,1]. Derived series (e.g. Bloch envelopes) may be
  // built by aggregate init without the probability-range check.
  static DecayTrace from_measurement(std::vector<double> delays, std::vector<double> p1,
                                     std::vector<int> shots = {},
                                     InitLabel init = InitLabel::none);
  void validate_grid() const;  // ascending delays, matching lengths only
  std::size_t size() const { return delays.size(); }
};

// Traces measured with final pi/2 analysis phases 0, pi/3, 2pi/3 on a common
// delay grid.
struct DephasingTriple {
  DecayTrace phase_0;
  DecayTrace phase_60;
  DecayTrace phase_120;

  void validate() const;  // identical delay grids
};

struct FitParam {
  double value = 0.0;
  double stderr_ = 0.0;  // from the local quadratic approximation at the optimum
};

struct FitResult {
  std::string model_id;
  std::map<std::string, FitParam> parameters;
  double residual_norm = 0.0;  // sqrt(sum of squared (weighted) residuals)
  bool converged = false;
  int n_points = 0;
  std::vector<std::string> notes;                 // warnings, degeneracy flags
  std::optional<double> exp_residual_norm;        // single-exponential reference (nonexp fit)

  bool has(const std::string& name) const { return parameters.count(name) != 0; }
  double value(const std::string& name) const { return parameters.at(name).value; }
  double error(const std::string& name) const { return parameters.at(name).stderr_; }
};

// ---- operations ----
// All fitters: damped least squares (trust-region LM) with 8 deterministic
// multi-starts over log-spaced time constants; shot-weighted (binomial
// variance) when shot counts are present; standard errors from the local
// quadratic approximation scaled by reduced chi-square. Throws fit_error on
// non-convergence of every start.

// a * exp(-t/T1) + b. Constant traces yield a flagged b-only result.
FitResult fit_exponential(const DecayTrace& trace);

// Shared (T1, b) across the |1>- and |0>-initialized traces, amplitudes a1, a2.
// If f01 (GHz) is supplied the fitted b is also mapped to an effective
// temperature (reported as temp_mk). fix_b pins the offset.
FitResult fit_joint_t1(const DecayTrace& trace_from_1, const DecayTrace& trace_from_0,
                       std::optional<double> f01 = std::nullopt,
                       std::optional<double> fix_b = std::nullopt);

// Exact per-delay solve of p_k = c + X cos(phi_k) + Y sin(phi_k) over the three
// analysis phases; returns the envelope sqrt(X^2 + Y^2) as an (unvalidated)
// DecayTrace.
DecayTrace bloch_envelope(const DephasingTriple& triple);

// Gaussian mode: a * exp(-t/2T1_ref) * exp(-Gamma_w t) * exp(-(t/Tphi)^2) with
// Gamma_w fitted only when include_white. pure_exponential switches to the
// plain a * exp(-t/t2) form used for headline T2 numbers.
FitResult fit_gaussian_dephasing(const DecayTrace& envelope, double t1_ref_us,
                                 const SequenceType& seq, bool include_white,
                                 bool pure_exponential = false);

// P1(t) = a * exp[n (exp(-t/T1_tilde) - 1)] * exp(-t/T1) + b. Reports the
// single-exponential residual norm for comparison; at the optimum the
// non-exponential residual never exceeds it (falls back to the nested optimum
// with n pinned to 0 when the extra structure is unidentifiable).
FitResult fit_nonexponential(const DecayTrace& trace);

}  // namespace fluxkit
