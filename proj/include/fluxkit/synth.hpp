// synth.hpp: synthetic datasets and Monte Carlo oracles
#pragma once

#include <cstdint>
#include <vector>

#include "fluxkit/noise_extract.hpp"
#include "fluxkit/noise_models.hpp"
#include "fluxkit/trace_fit.hpp"

namespace fluxkit {

// ---- 1/f trajectory synthesis ----

struct NoiseTrajectorySpec {
  double a_phi = 1.0;       // uPhi0/sqrt(Hz)
  double f_low = 0.0;       // Hz; 0 selects the default 1/(10*duration)
  double f_high = 0.0;      // Hz; 0 selects the default 1/(2*dt)
  double duration = 0.0;    // us
  double dt = 0.0;          // us
  std::uint64_t seed = 0;

  double f_low_effective() const;
  double f_high_effective() const;
  void validate() const;  // f_low < f_high <= Nyquist, positive duration/dt
};

// Frequency-domain synthesis of delta-Phi(t) in uPhi0 with double-sided PSD
// s(f) = a_phi^2 (1 Hz / |f|) on the discrete grid within [f_low, f_high],
// zero outside; independent complex Gaussian bins, inverse real FFT.
// The record is synthesized over length max(duration, 1/f_low) so the
// requested infrared band actually exists on the grid, then the leading
// duration/dt samples are returned. Bit-deterministic per seed.
std::vector<double> synth_1f_noise(const NoiseTrajectorySpec& spec);

// ---- Monte Carlo dephasing ----

struct EnsembleResult {
  std::vector<double> delays;    // us
  std::vector<double> envelope;  // |<exp(i phase)>|
  std::vector<double> std_err;   // per-delay standard error of the mean
  int n_trajectories = 0;
};

// Per trajectory: phase = D * integral of delta-Phi(t) s(t) dt with s the
// +/-1 CPMG toggling function (Ramsey: s == 1), integrated by exact piecewise
// summation over dt bins with pulse times snapped to the grid. Trajectories
// use KeyedRng(seed, index), so the ensemble is scheduling-independent;
// the reduction runs in fixed index order with compensated summation.
// Requires n_traj >= 100 and delays within the trajectory duration.
EnsembleResult simulate_dephasing(const NoiseTrajectorySpec& spec, double d_coeff,
                                  const SequenceType& seq,
                                  const std::vector<double>& delays, int n_traj,
                                  std::uint64_t seed);

// ---- synthetic decay traces ----

struct DecayModelSpec {
  enum class Kind { exponential, joint_pair, nonexponential, composite_chi };
  Kind kind = Kind::exponential;
  double a = 0.9;
  double b = 0.0;
  double t1 = 1000.0;       // us
  double a2 = 0.0;          // joint_pair second amplitude
  double n = 0.0;           // nonexponential
  double t1_tilde = 0.0;    // nonexponential, us
  SequenceType seq = SequenceType::cpmg(1);  // composite_chi
  double d_coeff = 0.0;     // composite_chi, rad*GHz/Phi0
  NoiseEnvironment env;     // composite_chi
};

// Evaluates the exact model curve, then samples each point binomially with the
// given shot count (shots = 0: noiseless). Returns one trace, or two for
// joint_pair (|1>- then |0>-initialized). Throws validation_error when the
// model produces probabilities outside [0,1].
std::vector<DecayTrace> synth_decay_trace(const DecayModelSpec& model,
                                          const std::vector<double>& delays,
                                          int shots, std::uint64_t seed);

// ---- synthetic flux scans ----

struct TlsDip {
  double phi_ext = 0.5;
  double suppression = 5.0;  // divide T1 by this at the nearest grid point
};

// Forward-models per-flux T1 (dielectric + quasiparticle channels) and Tphi
// (1/f + white dephasing) records for the requested sequences ("t1" entries
// via SequenceType tagging is not used here; pass include_t1), applies
// multiplicative TLS dips to T1 at the nearest grid point, then lognormal
// scatter with sigma_ln = 0.10. err_us is set to 10% of each value.
FluxScanDataset synth_flux_scan(const FluxoniumParams& qubit, const NoiseEnvironment& env,
                                const std::vector<double>& flux_grid,
                                const std::vector<SequenceType>& sequences,
                                bool include_t1, const std::vector<TlsDip>& tls_dips,
                                std::uint64_t seed, double scatter_sigma_ln = 0.10);

}  // namespace fluxkit
