// noise_extract.hpp: inverse problem: loss tangent and flux-noise amplitudes from flux scans
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluxkit/noise_models.hpp"
#include "fluxkit/trace_fit.hpp"

namespace fluxkit {

// ---- domain types ----

// One per-flux summary entry: either a T1 record or a dephasing-time record
// for a specific pulse sequence.
struct ScanRecord {
  double phi_ext = 0.5;
  bool is_t1 = false;
  SequenceType seq = SequenceType::cpmg(1);  // meaningful when !is_t1
  double time_constant_us = 0.0;
  double err_us = 0.0;  // 0 = unknown
};

// Raw decay data at one flux/sequence for joint chi(t) fitting.
struct RawScanTrace {
  double phi_ext = 0.5;
  SequenceType seq = SequenceType::cpmg(1);
  DecayTrace trace;
};

struct FluxScanDataset {
  FluxoniumParams qubit;
  std::vector<ScanRecord> records;
  std::vector<RawScanTrace> traces;  // optional; preferred by extract_flux_noise when present
  double idle_phi_ext = 0.5;         // metadata

  void validate() const;  // phi within one period, errors positive where present
};

struct MaskedPoint {
  std::size_t record_index = 0;
  double phi_ext = 0.0;
  double model_over_data = 0.0;
  std::string reason;
};

struct ExtractionReport {
  std::optional<FitParam> tan_delta_finite_t;
  std::optional<FitParam> tan_delta_t0;
  std::optional<FitParam> a_phi;     // uPhi0/sqrt(Hz)
  std::optional<FitParam> a_white;
  std::vector<double> residuals;     // log-space, per fitted record
  std::vector<MaskedPoint> masked;   // TLS-dip candidates; reported, never dropped
  std::vector<std::string> notes;
};

enum class TanDeltaVariant { finite_t, tls_t0 };

struct TanDeltaOptions {
  double asymmetry = 10.0;   // data-above-model penalty ratio
  bool robust_clip = false;  // soft-threshold the worst 10% negative outliers
};

// ---- operations ----

// Envelope-biased single-parameter fit of the dielectric T1 model over a flux
// scan. Residuals are taken in log space, making the asymmetric loss
// piecewise-quadratic in ln(tan_delta); the global minimum is found exactly by
// breakpoint scan. Both temperature variants are always extracted; `variant`
// marks which one the caller treats as primary. Requires >= 8 T1 points
// spanning both sides of the sweet spot.
ExtractionReport extract_tan_delta(const FluxScanDataset& scan, double temp_k,
                                   TanDeltaVariant variant,
                                   const TanDeltaOptions& options = {});

// Joint two-parameter (A_phi, a_white) fit over multi-sequence dephasing data.
// Uses summary records (log-Tphi residuals, error-weighted) or, when present,
// raw traces (joint chi(t) fit with one free amplitude per curve;
// t1_reference supplies the T1 factor per flux, nearest-point lookup).
// Throws fit_error when fewer than two distinct sequences carry data or when
// every usable point sits at D = 0 (A_phi unidentifiable).
ExtractionReport extract_flux_noise(const std::vector<FluxScanDataset>& scans,
                                    const std::vector<std::pair<double, double>>&
                                        t1_reference = {});

// ---- zeta outputs ----

struct ZetaRow {
  std::string label;
  double f01 = 0.0;   // GHz, computed at the sweet spot
  double zeta = 0.0;  // us/GHz
};

// One row per (params, measured T1 us) pair, sorted by f01.
std::vector<ZetaRow> zeta_table(
    const std::vector<std::pair<FluxoniumParams, double>>& qubits);

struct BandRow {
  double f01 = 0.0;
  double zeta_lo = 0.0;    // combined model at the upper tan_delta
  double zeta_hi = 0.0;    // combined model at the lower tan_delta
  double zeta_flux = 0.0;  // flux-noise-only reference curve
};

// Representative sweet-spot fluxonium parameters for the band (the combined
// rate depends only on e_c * e_l^2 once matrix elements cancel).
struct BandParams {
  double e_c = 1.212;
  double e_l = 0.547;
};

// Combined dielectric + flux-noise model band over a frequency grid:
// 1/T1 = 1/T1_diel + 1/T1_flux, zeta_lo/zeta_hi from (hi, lo) tan_delta.
std::vector<BandRow> model_band(const std::vector<double>& f01_grid,
                                std::pair<double, double> tan_delta_range,
                                double a_phi, double temp_k,
                                const BandParams& rep = {});

}  // namespace fluxkit
