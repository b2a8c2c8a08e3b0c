// nlfit.hpp: internal trust-region least-squares wrapper (not installed)
#pragma once

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_matrix.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_vector.h>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace fluxkit::detail {

struct NlFitProblem {
  int n_residuals = 0;
  int n_params = 0;
  // Fills n_residuals weighted residuals for the given parameter vector.
  std::function<void(const double*, double*)> residuals;
};

struct NlFitOutcome {
  std::vector<double> params;
  std::vector<double> stderrs;  // sqrt(diag covar * reduced chi-square)
  double cost = 0.0;            // sum of squared residuals
  bool converged = false;
};

inline int nlfit_eval_(const gsl_vector* x, void* ctx, gsl_vector* f) {
  const auto* prob = static_cast<const NlFitProblem*>(ctx);
  std::vector<double> p(prob->n_params), r(prob->n_residuals);
  for (int i = 0; i < prob->n_params; ++i) p[i] = gsl_vector_get(x, i);
  prob->residuals(p.data(), r.data());
  for (int i = 0; i < prob->n_residuals; ++i) {
    const double v = std::isfinite(r[i]) ? r[i] : 1e8;
    gsl_vector_set(f, i, v);
  }
  return GSL_SUCCESS;
}

// One trust-region Levenberg-Marquardt solve with finite-difference Jacobian.
inline std::optional<NlFitOutcome> nlfit_solve(const NlFitProblem& prob,
                                               const std::vector<double>& start,
                                               int max_iter = 400) {
  gsl_set_error_handler_off();
  if (prob.n_residuals < prob.n_params || prob.n_params == 0) return std::nullopt;

  gsl_multifit_nlinear_parameters setup = gsl_multifit_nlinear_default_parameters();
  gsl_multifit_nlinear_workspace* w = gsl_multifit_nlinear_alloc(
      gsl_multifit_nlinear_trust, &setup, prob.n_residuals, prob.n_params);
  if (w == nullptr) return std::nullopt;

  gsl_multifit_nlinear_fdf fdf;
  fdf.f = nlfit_eval_;
  fdf.df = nullptr;   // finite-difference Jacobian
  fdf.fvv = nullptr;
  fdf.n = static_cast<std::size_t>(prob.n_residuals);
  fdf.p = static_cast<std::size_t>(prob.n_params);
  fdf.params = const_cast<NlFitProblem*>(&prob);

  gsl_vector* x0 = gsl_vector_alloc(prob.n_params);
  for (int i = 0; i < prob.n_params; ++i) gsl_vector_set(x0, i, start[i]);

  std::optional<NlFitOutcome> out;
  if (gsl_multifit_nlinear_init(x0, &fdf, w) == GSL_SUCCESS) {
    int info = 0;
    const int status =
        gsl_multifit_nlinear_driver(max_iter, 1e-12, 1e-12, 1e-12, nullptr, nullptr,
                                    &info, w);
    const bool converged = (status == GSL_SUCCESS || status == GSL_ENOPROG);

    double chisq = 0.0;
    gsl_vector* f = gsl_multifit_nlinear_residual(w);
    gsl_blas_ddot(f, f, &chisq);

    if (std::isfinite(chisq)) {
      NlFitOutcome o;
      o.cost = chisq;
      o.converged = converged;
      o.params.resize(prob.n_params);
      for (int i = 0; i < prob.n_params; ++i)
        o.params[i] = gsl_vector_get(w->x, i);

      o.stderrs.assign(prob.n_params, 0.0);
      gsl_matrix* covar = gsl_matrix_alloc(prob.n_params, prob.n_params);
      if (gsl_multifit_nlinear_covar(gsl_multifit_nlinear_jac(w), 0.0, covar) ==
          GSL_SUCCESS) {
        const int dof = prob.n_residuals - prob.n_params;
        const double scale = dof > 0 ? chisq / dof : 1.0;
        for (int i = 0; i < prob.n_params; ++i) {
          const double v = gsl_matrix_get(covar, i, i) * scale;
          o.stderrs[i] = (std::isfinite(v) && v > 0.0) ? std::sqrt(v) : 0.0;
        }
      }
      gsl_matrix_free(covar);
      out = std::move(o);
    }
  }
  gsl_vector_free(x0);
  gsl_multifit_nlinear_free(w);
  return out;
}

// Best converged outcome over the start list; ties broken by lowest index.
inline std::optional<NlFitOutcome> nlfit_best(
    const NlFitProblem& prob, const std::vector<std::vector<double>>& starts) {
  std::optional<NlFitOutcome> best;
  for (const auto& s : starts) {
    auto o = nlfit_solve(prob, s);
    if (!o || !o->converged) continue;
    if (!best || o->cost < best->cost) best = std::move(o);
  }
  return best;
}

}  // namespace fluxkit::detail
