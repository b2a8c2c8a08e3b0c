// noise_extract.cpp: loss tangent and flux-noise extraction from flux scans
#include "fluxkit/noise_extract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "fluxkit/constants.hpp"
#include "fluxkit/errors.hpp"
#include "nlfit.hpp"

namespace fluxkit {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

void check_phi_period(double phi) {
  if (!(phi >= 0.0 && phi <= 1.0))
    throw validation_error("scan phi_ext outside one period [0, 1]");
}

// Per-flux forward-model quantities shared by both extractors.
struct FluxPoint {
  double f01 = 0.0;
  double abs_phi_01 = 0.0;
  double dispersion = 0.0;  // rad GHz / Phi0
};

class FluxPointCache {
 public:
  explicit FluxPointCache(const FluxoniumParams& params) : params_(params) {}

  const FluxPoint& at(double phi, bool need_dispersion) {
    auto it = cache_.find(phi);
    if (it == cache_.end() || (need_dispersion && !it->second.second)) {
      FluxPoint pt;
      const EigenSolution sol = converged_spectrum(params_, FluxBias{phi}, 2, 1e-9);
      pt.f01 = sol.f01();
      pt.abs_phi_01 = matrix_elements(sol, 0, 1).abs_phi_01;
      if (need_dispersion) pt.dispersion = flux_dispersion(params_, FluxBias{phi});
      it = cache_.insert_or_assign(phi, std::make_pair(pt, need_dispersion)).first;
    }
    return it->second.first;
  }

 private:
  FluxoniumParams params_;
  std::map<double, std::pair<FluxPoint, bool>> cache_;
};

// Exact minimizer of sum_i c_i(z) (z + d_i)^2 where c_i depends only on the
// sign of (z + d_i): piecewise-quadratic convex loss, solved by scanning the
// breakpoints z = -d_i.
double asymmetric_log_solve(const std::vector<double>& d,
                            const std::vector<double>& w, double asymmetry) {
  std::vector<double> breaks;
  breaks.reserve(d.size());
  for (double di : d) breaks.push_back(-di);
  std::sort(breaks.begin(), breaks.end());

  auto loss_at = [&](double z) {
    double l = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = z + d[i];
      const double c = w[i] * (r > 0.0 ? asymmetry : 1.0);
      l += c * r * r;
    }
    return l;
  };
  auto interval_min = [&](double z_probe) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double c = w[i] * ((z_probe + d[i]) > 0.0 ? asymmetry : 1.0);
      num += c * d[i];
      den += c;
    }
    return den > 0.0 ? -num / den : z_probe;
  };

  double best_z = breaks.front();
  double best_l = loss_at(best_z);
  auto consider = [&](double z) {
    const double l = loss_at(z);
    if (l < best_l) {
      best_l = l;
      best_z = z;
    }
  };
  for (double z : breaks) consider(z);
  for (std::size_t k = 0; k + 1 <= breaks.size(); ++k) {
    const double lo = breaks[k];
    const double hi = (k + 1 < breaks.size())
                          ? breaks[k + 1]
                          : breaks.back() + 1.0;  // open interval above
    const double probe = (k + 1 < breaks.size()) ? 0.5 * (lo + hi) : lo + 0.5;
    double z = interval_min(probe);
    z = std::clamp(z, lo, hi);
    consider(z);
  }
  // interval below the lowest breakpoint
  {
    const double probe = breaks.front() - 0.5;
    double z = interval_min(probe);
    z = std::min(z, breaks.front());
    consider(z);
  }
  return best_z;
}

struct VariantFit {
  double tan_delta = 0.0;
  double stderr_ = 0.0;
  std::vector<double> residuals;  // data - model, log space
};

VariantFit fit_tan_delta_variant(const std::vector<double>& d,
                                 std::vector<double> w,
                                 const TanDeltaOptions& options) {
  for (double di : d)
    if (!std::isfinite(di)) throw fit_error("degenerate tan_delta scan");

  double z = asymmetric_log_solve(d, w, options.asymmetry);

  if (options.robust_clip && d.size() >= 10) {
    // soft-threshold the worst 10% negative (data-below-model) outliers, then
    // re-solve once
    std::vector<std::pair<double, std::size_t>> neg;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = z + d[i];
      if (r < 0.0) neg.emplace_back(r, i);
    }
    const std::size_t m = d.size() / 10;
    if (neg.size() > m && m > 0) {
      std::sort(neg.begin(), neg.end());
      const double r_ref = neg[m].first;  // boundary residual kept at full weight
      for (std::size_t k = 0; k < m; ++k) {
        const double ratio = r_ref / neg[k].first;  // both negative, ratio in (0,1]
        w[neg[k].second] *= ratio * ratio;
      }
      z = asymmetric_log_solve(d, w, options.asymmetry);
    }
  }

  VariantFit out;
  out.tan_delta = std::exp(z);
  double loss = 0.0, curv = 0.0;
  out.residuals.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = z + d[i];
    const double c = w[i] * (r > 0.0 ? options.asymmetry : 1.0);
    loss += c * r * r;
    curv += c;
    out.residuals.push_back(r);
  }
  const double dof = d.size() > 1 ? static_cast<double>(d.size() - 1) : 1.0;
  const double sigma_z = curv > 0.0 ? std::sqrt(loss / dof / curv) : 0.0;
  out.stderr_ = out.tan_delta * sigma_z;
  return out;
}

double coth_at(double f01, double temp_k) {
  if (temp_k == 0.0) return 1.0;
  return 1.0 / std::tanh(f01 / (2.0 * kb_h_ghz_per_k * temp_k));
}

// 1/e time of exp(-gamma_w t - g2 t^2), in the stable quadratic-root form that
// degrades gracefully to 1/gamma_w as g2 -> 0.
double dephasing_time_model(double gamma_w, double g2) {
  const double disc = gamma_w * gamma_w + 4.0 * g2;
  const double denom = gamma_w + std::sqrt(std::max(disc, 0.0));
  if (denom <= 0.0) return 1e12;
  return std::min(2.0 / denom, 1e12);
}

}  // namespace

// ---- domain types ----

void FluxScanDataset::validate() const {
  qubit.validate();
  for (const auto& r : records) {
    check_phi_period(r.phi_ext);
    if (!(r.time_constant_us > 0.0))
      throw validation_error("scan time constant must be positive");
    if (!(r.err_us >= 0.0) || !std::isfinite(r.err_us))
      throw validation_error("scan error bar must be nonnegative");
  }
  for (const auto& t : traces) {
    check_phi_period(t.phi_ext);
    t.trace.validate_grid();
  }
}

// ---- tan delta ----

ExtractionReport extract_tan_delta(const FluxScanDataset& scan, double temp_k,
                                   TanDeltaVariant variant,
                                   const TanDeltaOptions& options) {
  scan.validate();
  if (!(temp_k >= 0.0)) throw validation_error("temperature must be nonnegative");
  if (!(options.asymmetry >= 1.0))
    throw validation_error("asymmetry ratio must be >= 1");

  std::vector<const ScanRecord*> t1_records;
  for (const auto& r : scan.records)
    if (r.is_t1) t1_records.push_back(&r);
  if (t1_records.size() < 8)
    throw validation_error("extract_tan_delta requires at least 8 T1 points");
  bool below = false, above = false;
  for (const auto* r : t1_records) {
    below = below || r->phi_ext < 0.5;
    above = above || r->phi_ext > 0.5;
  }
  if (!below || !above)
    throw validation_error("extract_tan_delta scan must span both sides of 0.5");

  FluxPointCache cache(scan.qubit);
  // d_i = ln T1_i + ln(1e3 C_i) where 1/T1_model = 1e3 C_i tan_delta;
  // residual (data - model) in log space is z + d_i with z = ln tan_delta.
  std::vector<double> d_t0, d_ft, w;
  d_t0.reserve(t1_records.size());
  for (const auto* r : t1_records) {
    const FluxPoint& pt = cache.at(r->phi_ext, false);
    const double c0 = kPi * pt.f01 * pt.f01 / (2.0 * scan.qubit.e_c) *
                      pt.abs_phi_01 * pt.abs_phi_01;
    const double base = std::log(r->time_constant_us) + std::log(1e3 * c0);
    d_t0.push_back(base);
    d_ft.push_back(base + std::log(coth_at(pt.f01, temp_k)));
    w.push_back(r->err_us > 0.0
                    ? std::pow(r->time_constant_us / r->err_us, 2.0)
                    : 1.0);
  }

  const VariantFit fit_t0 = fit_tan_delta_variant(d_t0, w, options);
  const VariantFit fit_ft = fit_tan_delta_variant(d_ft, w, options);

  ExtractionReport rep;
  rep.tan_delta_t0 = FitParam{fit_t0.tan_delta, fit_t0.stderr_};
  rep.tan_delta_finite_t = FitParam{fit_ft.tan_delta, fit_ft.stderr_};
  const VariantFit& primary =
      (variant == TanDeltaVariant::tls_t0) ? fit_t0 : fit_ft;
  rep.residuals = primary.residuals;

  for (std::size_t i = 0; i < t1_records.size(); ++i) {
    // residual = ln(data) - ln(model); dips sit far below the model
    const double model_over_data = std::exp(-primary.residuals[i]);
    if (model_over_data > 3.0) {
      MaskedPoint mp;
      mp.record_index = static_cast<std::size_t>(t1_records[i] - scan.records.data());
      mp.phi_ext = t1_records[i]->phi_ext;
      mp.model_over_data = model_over_data;
      mp.reason = "T1 more than 3x below the model (TLS dip candidate)";
      rep.masked.push_back(mp);
    }
  }
  {
    std::ostringstream os;
    os << "asymmetry " << options.asymmetry << ", " << t1_records.size()
       << " T1 points, primary variant "
       << (variant == TanDeltaVariant::tls_t0 ? "tls_t0" : "finite_t");
    rep.notes.push_back(os.str());
  }
  return rep;
}

// ---- flux noise ----

ExtractionReport extract_flux_noise(
    const std::vector<FluxScanDataset>& scans,
    const std::vector<std::pair<double, double>>& t1_reference) {
  if (scans.empty()) throw validation_error("extract_flux_noise: no datasets");
  for (const auto& s : scans) s.validate();

  bool any_traces = false;
  for (const auto& s : scans) any_traces = any_traces || !s.traces.empty();

  std::set<std::string> seq_names;
  if (any_traces) {
    for (const auto& s : scans)
      for (const auto& t : s.traces) seq_names.insert(t.seq.name());
  } else {
    for (const auto& s : scans)
      for (const auto& r : s.records)
        if (!r.is_t1) seq_names.insert(r.seq.name());
  }
  if (seq_names.size() < 2)
    throw fit_error(
        "flux-noise extraction needs at least two distinct pulse sequences");

  auto t1_lookup = [&](double phi) {
    if (t1_reference.empty()) return std::numeric_limits<double>::infinity();
    double best_d = std::numeric_limits<double>::infinity(), best_t1 = 0.0;
    for (const auto& [p, t1] : t1_reference) {
      const double dist = std::abs(p - phi);
      if (dist < best_d) {
        best_d = dist;
        best_t1 = t1;
      }
    }
    return best_t1;
  };

  ExtractionReport rep;
  std::map<int, double> u_cpmg_cache;
  auto u_cpmg = [&](const SequenceType& seq) {
    auto it = u_cpmg_cache.find(seq.n_pulses);
    if (it == u_cpmg_cache.end())
      it = u_cpmg_cache.emplace(seq.n_pulses, filter_u_coefficient(seq)).first;
    return it->second;
  };

  detail::NlFitProblem prob;
  std::vector<std::vector<double>> starts;
  double seed_p = 2.0;

  if (any_traces) {
    // Joint chi(t) fit: parameters (p, q, ln a_c per curve), alpha = p^2,
    // S_white = q^2.
    struct CurvePoint {
      double t, val, sig, g_coeff, inv_t1;  // g_coeff = (1e-3 t D u)^2
    };
    struct TraceCtx {
      std::vector<std::vector<CurvePoint>> curves;
      std::vector<double> d_abs;
    };
    auto ctx = std::make_shared<TraceCtx>();
    bool any_d = false;
    for (const auto& s : scans) {
      FluxPointCache cache(s.qubit);
      for (const auto& tr : s.traces) {
        const FluxPoint& pt = cache.at(tr.phi_ext, true);
        if (std::abs(pt.dispersion) > 1e-4) any_d = true;
        const double t1 = t1_lookup(tr.phi_ext);
        std::vector<CurvePoint> pts;
        for (std::size_t i = 0; i < tr.trace.size(); ++i) {
          CurvePoint cp;
          cp.t = tr.trace.delays[i];
          cp.val = tr.trace.p1[i];
          cp.sig = 1.0;
          const double u = tr.seq.is_ramsey()
                               ? (cp.t > 0.0 ? filter_u_coefficient(tr.seq, cp.t) : 0.0)
                               : u_cpmg(tr.seq);
          const double base = 1e-3 * cp.t * pt.dispersion * u;
          cp.g_coeff = base * base;
          cp.inv_t1 = std::isfinite(t1) && t1 > 0.0 ? 1.0 / t1 : 0.0;
          pts.push_back(cp);
        }
        ctx->curves.push_back(std::move(pts));
        ctx->d_abs.push_back(std::abs(pt.dispersion));
      }
    }
    if (!any_d)
      throw fit_error("all flux points sit at D = 0: A_phi unidentifiable");

    int n_res = 0;
    for (const auto& c : ctx->curves) n_res += static_cast<int>(c.size());
    const int nc = static_cast<int>(ctx->curves.size());
    prob.n_residuals = n_res;
    prob.n_params = 2 + nc;
    prob.residuals = [ctx](const double* x, double* r) {
      const double alpha = x[0] * x[0], s_white = x[1] * x[1];
      int k = 0;
      for (std::size_t c = 0; c < ctx->curves.size(); ++c) {
        const double a = std::exp(x[2 + c]);
        const double gw = 0.5 * ctx->d_abs[c] * ctx->d_abs[c] * s_white;
        for (const auto& cp : ctx->curves[c]) {
          const double m = a * std::exp(-cp.t * cp.inv_t1 / 2.0 - gw * cp.t -
                                        alpha * cp.g_coeff);
          r[k++] = (m - cp.val) / cp.sig;
        }
      }
    };

    for (double p0 : {0.5, 2.0, 8.0})
      for (double q0 : {0.02, 0.5}) {
        std::vector<double> s = {p0, q0};
        for (std::size_t c = 0; c < ctx->curves.size(); ++c)
          s.push_back(std::log(std::max(ctx->curves[c].front().val, 1e-3)));
        starts.push_back(std::move(s));
      }
    for (double p0 : {seed_p, 20.0}) {
      std::vector<double> s = {p0, 0.1};
      for (std::size_t c = 0; c < ctx->curves.size(); ++c)
        s.push_back(std::log(std::max(ctx->curves[c].front().val, 1e-3)));
      starts.push_back(std::move(s));
    }

    const auto best = detail::nlfit_best(prob, starts);
    if (!best) throw fit_error("flux-noise joint trace fit did not converge");
    rep.a_phi = FitParam{std::abs(best->params[0]), best->stderrs[0]};
    rep.a_white = FitParam{std::abs(best->params[1]), best->stderrs[1]};
    {
      std::vector<double> resid(prob.n_residuals);
      prob.residuals(best->params.data(), resid.data());
      rep.residuals = resid;
    }
    rep.notes.push_back("joint trace mode over " + std::to_string(nc) + " curves");
    return rep;
  }

  // Record mode: log-residuals on fitted dephasing times.
  struct RecEntry {
    double tphi, w, g_coeff, d_abs;  // g_coeff = (1e-3 D u)^2 (per t^2)
  };
  std::vector<RecEntry> entries;
  bool any_d = false;
  for (const auto& s : scans) {
    FluxPointCache cache(s.qubit);
    for (const auto& r : s.records) {
      if (r.is_t1) continue;
      const FluxPoint& pt = cache.at(r.phi_ext, true);
      RecEntry e;
      e.tphi = r.time_constant_us;
      e.w = r.err_us > 0.0 ? r.time_constant_us / r.err_us : 1.0;
      const double u = r.seq.is_ramsey()
                           ? filter_u_coefficient(r.seq, r.time_constant_us)
                           : u_cpmg(r.seq);
      const double base = 1e-3 * pt.dispersion * u;
      e.g_coeff = base * base;
      e.d_abs = std::abs(pt.dispersion);
      if (e.d_abs > 1e-4) any_d = true;
      entries.push_back(e);
    }
  }
  if (entries.size() < 2)
    throw validation_error("extract_flux_noise: no dephasing records");
  if (!any_d)
    throw fit_error("all flux points sit at D = 0: A_phi unidentifiable");

  // data-driven seed from the largest-dispersion entry
  {
    const auto it = std::max_element(
        entries.begin(), entries.end(),
        [](const RecEntry& a, const RecEntry& b) { return a.d_abs < b.d_abs; });
    if (it->g_coeff > 0.0 && it->tphi > 0.0)
      seed_p = 1.0 / (std::sqrt(it->g_coeff) * it->tphi);
  }

  prob.n_residuals = static_cast<int>(entries.size());
  prob.n_params = 2;
  prob.residuals = [entries](const double* x, double* r) {
    const double alpha = x[0] * x[0], s_white = x[1] * x[1];
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const RecEntry& e = entries[i];
      const double gw = 0.5 * e.d_abs * e.d_abs * s_white;
      const double model = dephasing_time_model(gw, alpha * e.g_coeff);
      r[i] = (std::log(model) - std::log(e.tphi)) * e.w;
    }
  };
  starts = {{seed_p, 0.02}, {0.5, 0.02}, {2.0, 0.02}, {8.0, 0.02},
            {0.5, 0.5},     {2.0, 0.5},  {8.0, 0.5},  {20.0, 0.1}};

  const auto best = detail::nlfit_best(prob, starts);
  if (!best) throw fit_error("flux-noise record fit did not converge");
  rep.a_phi = FitParam{std::abs(best->params[0]), best->stderrs[0]};
  rep.a_white = FitParam{std::abs(best->params[1]), best->stderrs[1]};
  {
    std::vector<double> resid(prob.n_residuals);
    prob.residuals(best->params.data(), resid.data());
    for (double& v : resid) v = -v;  // report as data - model
    rep.residuals = resid;
  }
  rep.notes.push_back("record mode over " + std::to_string(entries.size()) +
                      " dephasing points, " + std::to_string(seq_names.size()) +
                      " sequences");
  return rep;
}

// ---- zeta outputs ----

std::vector<ZetaRow> zeta_table(
    const std::vector<std::pair<FluxoniumParams, double>>& qubits) {
  std::vector<ZetaRow> rows;
  for (const auto& [params, t1] : qubits) {
    if (!(t1 > 0.0)) throw validation_error("zeta_table requires T1 > 0");
    const EigenSolution sol = converged_spectrum(params, FluxBias{0.5}, 2, 1e-9);
    const MatrixElements elems = matrix_elements(sol, 0, 1);
    ZetaRow row;
    row.label = params.label;
    row.f01 = sol.f01();
    row.zeta = zeta(t1, elems, params);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(),
            [](const ZetaRow& a, const ZetaRow& b) { return a.f01 < b.f01; });
  return rows;
}

std::vector<BandRow> model_band(const std::vector<double>& f01_grid,
                                std::pair<double, double> tan_delta_range,
                                double a_phi, double temp_k,
                                const BandParams& rep) {
  if (f01_grid.empty()) throw validation_error("model_band: empty frequency grid");
  for (std::size_t i = 0; i + 1 < f01_grid.size(); ++i)
    if (!(f01_grid[i] < f01_grid[i + 1]))
      throw validation_error("model_band: grid must ascend");
  const auto [td_lo, td_hi] = tan_delta_range;
  if (!(td_lo > 0.0) || !(td_hi >= td_lo))
    throw validation_error("model_band: need 0 < tan_delta_lo <= tan_delta_hi");
  if (!(a_phi >= 0.0)) throw validation_error("model_band: a_phi must be nonnegative");

  std::vector<BandRow> rows;
  rows.reserve(f01_grid.size());
  for (double f01 : f01_grid) {
    if (!(f01 > 0.0)) throw validation_error("model_band: f01 must be positive");
    // e_c * rate-per-|phi01|^2 for each channel; |phi01|^2 cancels in zeta
    const double coth = coth_at(f01, temp_k);
    auto ec_cd = [&](double td) { return 1e3 * kPi * f01 * f01 * td * coth / 2.0; };
    const double ec_cf = rep.e_c * flux_noise_rate_coeff(f01, rep.e_l, a_phi);
    BandRow row;
    row.f01 = f01;
    row.zeta_lo = 1.0 / (ec_cd(td_hi) + ec_cf);
    row.zeta_hi = 1.0 / (ec_cd(td_lo) + ec_cf);
    row.zeta_flux = ec_cf > 0.0 ? 1.0 / ec_cf
                                : std::numeric_limits<double>::infinity();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fluxkit
