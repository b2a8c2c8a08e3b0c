// synth.cpp: synthetic datasets and Monte Carlo dephasing oracles
#include "fluxkit/synth.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include "fluxkit/errors.hpp"
#include "fluxkit/rng.hpp"

namespace fluxkit {

namespace {

// FFTW plans are cached per transform length; new-array execution with
// FFTW_UNALIGNED keeps them valid for any buffer.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache c;
    return c;
  }

  void execute_c2r(int n, fftw_complex* in, double* out) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(n);
    if (it == plans_.end()) {
      fftw_complex* tin =
          static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
      double* tout = static_cast<double*>(fftw_malloc(sizeof(double) * n));
      fftw_plan p = fftw_plan_dft_c2r_1d(n, tin, tout,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_free(tin);
      fftw_free(tout);
      if (p == nullptr) throw solver_error("fftw plan creation failed");
      it = plans_.emplace(n, p).first;
    }
    fftw_execute_dft_c2r(it->second, in, out);
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

std::vector<double> synth_core(const NoiseTrajectorySpec& spec, KeyedRng& rng) {
  spec.validate();
  const double f_low = spec.f_low_effective();
  const double f_high = spec.f_high_effective();

  // Extend the record so the infrared band exists on the frequency grid.
  const double record_us = std::max(spec.duration, 1e6 / f_low);
  const long n_out = std::lround(spec.duration / spec.dt);
  long n = std::lround(record_us / spec.dt);
  if (n < n_out) n = n_out;
  if (n < 2) throw validation_error("trajectory record too short");

  const double df = 1.0 / (n * spec.dt * 1e-6);  // Hz
  const long n_bins = n / 2 + 1;

  fftw_complex* spec_buf =
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins));
  double* time_buf = static_cast<double*>(fftw_malloc(sizeof(double) * n));

  for (long k = 0; k < n_bins; ++k) {
    // fixed draw order keeps the stream independent of the band edges
    const double g = rng.next_gaussian();
    const double h = rng.next_gaussian();
    const double f = k * df;
    double amp = 0.0;
    if (f > 0.0 && f >= f_low * (1.0 - 1e-12) && f <= f_high * (1.0 + 1e-12))
      amp = spec.a_phi * std::sqrt(df / f);
    spec_buf[k][0] = amp * g;
    spec_buf[k][1] = amp * h;
  }
  spec_buf[0][1] = 0.0;
  if (n % 2 == 0) spec_buf[n_bins - 1][1] = 0.0;

  PlanCache::instance().execute_c2r(static_cast<int>(n), spec_buf, time_buf);

  // fftw c2r is unnormalized (n times the inverse DFT); the target recipe is
  // irfft * n / sqrt(2), so only the sqrt(2) remains.
  const double scale = 1.0 / std::sqrt(2.0);
  std::vector<double> out(static_cast<std::size_t>(n_out));
  for (long i = 0; i < n_out; ++i) out[i] = time_buf[i] * scale;

  fftw_free(spec_buf);
  fftw_free(time_buf);
  return out;
}

}  // namespace

// ---- trajectory synthesis ----

double NoiseTrajectorySpec::f_low_effective() const {
  return f_low > 0.0 ? f_low : 1e6 / (10.0 * duration);
}

double NoiseTrajectorySpec::f_high_effective() const {
  return f_high > 0.0 ? f_high : 5e5 / dt;
}

void NoiseTrajectorySpec::validate() const {
  if (!(a_phi >= 0.0)) throw validation_error("a_phi must be nonnegative");
  if (!(duration > 0.0)) throw validation_error("duration must be positive");
  if (!(dt > 0.0) || !(dt <= duration))
    throw validation_error("dt must satisfy 0 < dt <= duration");
  const double nyquist = 5e5 / dt;  // Hz
  if (!(f_low_effective() < f_high_effective()))
    throw validation_error("need f_low < f_high");
  if (f_high_effective() > nyquist * (1.0 + 1e-12))
    throw validation_error("f_high exceeds the Nyquist frequency");
}

std::vector<double> synth_1f_noise(const NoiseTrajectorySpec& spec) {
  KeyedRng rng(spec.seed, 0);
  return synth_core(spec, rng);
}

// ---- Monte Carlo dephasing ----

EnsembleResult simulate_dephasing(const NoiseTrajectorySpec& spec, double d_coeff,
                                  const SequenceType& seq,
                                  const std::vector<double>& delays, int n_traj,
                                  std::uint64_t seed) {
  spec.validate();
  if (n_traj < 100) throw validation_error("simulate_dephasing requires n_traj >= 100");
  if (delays.empty()) throw validation_error("simulate_dephasing: no delays");
  for (double t : delays)
    if (!(t >= 0.0) || t > spec.duration * (1.0 + 1e-9))
      throw validation_error("delays must lie within the trajectory duration");

  // Precompute snapped toggling-sign segments per delay.
  struct Segments {
    long n_t = 0;
    std::vector<long> flips;  // bin indices where the sign toggles
  };
  std::vector<Segments> segs(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) {
    segs[i].n_t = std::lround(delays[i] / spec.dt);
    if (!seq.is_ramsey()) {
      for (int k = 1; k <= seq.n_pulses; ++k)
        segs[i].flips.push_back(
            std::lround(segs[i].n_t * (k - 0.5) / seq.n_pulses));
    }
  }

  const std::size_t nd = delays.size();
  std::vector<double> sum_re(nd, 0.0), sum_im(nd, 0.0);
  std::vector<double> c_re(nd, 0.0), c_im(nd, 0.0);  // Kahan compensations
  std::vector<double> sq_re(nd, 0.0), sq_im(nd, 0.0);

  auto kahan_add = [](double& sum, double& comp, double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };

  for (int j = 0; j < n_traj; ++j) {
    KeyedRng rng(seed, static_cast<std::uint64_t>(j));
    const std::vector<double> traj = synth_core(spec, rng);
    // prefix sums make every windowed signed sum O(#flips)
    std::vector<double> prefix(traj.size() + 1, 0.0);
    for (std::size_t i = 0; i < traj.size(); ++i) prefix[i + 1] = prefix[i] + traj[i];

    for (std::size_t i = 0; i < nd; ++i) {
      const long n_t = std::min<long>(segs[i].n_t, static_cast<long>(traj.size()));
      double acc = 0.0;
      double sign = 1.0;
      long prev = 0;
      for (long flip : segs[i].flips) {
        const long f = std::clamp(flip, prev, n_t);
        acc += sign * (prefix[f] - prefix[prev]);
        prev = f;
        sign = -sign;
      }
      acc += sign * (prefix[n_t] - prefix[prev]);
      const double phase = 1e-3 * d_coeff * spec.dt * acc;
      const double re = std::cos(phase), im = std::sin(phase);
      kahan_add(sum_re[i], c_re[i], re);
      kahan_add(sum_im[i], c_im[i], im);
      sq_re[i] += re * re;
      sq_im[i] += im * im;
    }
  }

  EnsembleResult res;
  res.delays = delays;
  res.n_trajectories = n_traj;
  res.envelope.resize(nd);
  res.std_err.resize(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const double mr = sum_re[i] / n_traj, mi = sum_im[i] / n_traj;
    const double env = std::hypot(mr, mi);
    res.envelope[i] = env;
    const double var_re = std::max(sq_re[i] / n_traj - mr * mr, 0.0);
    const double var_im = std::max(sq_im[i] / n_traj - mi * mi, 0.0);
    double se;
    if (env > 1e-12) {
      se = std::sqrt((mr * mr * var_re + mi * mi * var_im) / (env * env) / n_traj);
    } else {
      se = std::sqrt((var_re + var_im) / n_traj);
    }
    res.std_err[i] = se;
  }
  return res;
}

// ---- synthetic decay traces ----

std::vector<DecayTrace> synth_decay_trace(const DecayModelSpec& model,
                                          const std::vector<double>& delays,
                                          int shots, std::uint64_t seed) {
  if (delays.empty()) throw validation_error("synth_decay_trace: no delays");
  for (std::size_t i = 0; i + 1 < delays.size(); ++i)
    if (!(delays[i] < delays[i + 1]))
      throw validation_error("synth_decay_trace: delays must ascend");
  if (shots < 0) throw validation_error("synth_decay_trace: negative shot count");

  auto curve_value = [&](double t, bool second) {
    switch (model.kind) {
      case DecayModelSpec::Kind::exponential:
        return model.a * std::exp(-t / model.t1) + model.b;
      case DecayModelSpec::Kind::joint_pair: {
        const double amp = second ? model.a2 : model.a;
        return amp * std::exp(-t / model.t1) + model.b;
      }
      case DecayModelSpec::Kind::nonexponential:
        return model.a * std::exp(model.n * (std::exp(-t / model.t1_tilde) - 1.0)) *
                   std::exp(-t / model.t1) +
               model.b;
      case DecayModelSpec::Kind::composite_chi:
        return model.a *
                   dephasing_envelope(model.seq, model.d_coeff, model.env, t,
                                      model.t1) +
               model.b;
    }
    return 0.0;
  };

  const int n_traces = model.kind == DecayModelSpec::Kind::joint_pair ? 2 : 1;
  std::vector<DecayTrace> out;
  for (int c = 0; c < n_traces; ++c) {
    KeyedRng rng(seed, static_cast<std::uint64_t>(c));
    std::vector<double> p1(delays.size());
    for (std::size_t i = 0; i < delays.size(); ++i) {
      double p = curve_value(delays[i], c == 1);
      if (p < -1e-9 || p > 1.0 + 1e-9)
        throw validation_error("decay model produced probability outside [0, 1]");
      p = std::clamp(p, 0.0, 1.0);
      p1[i] = shots > 0 ? static_cast<double>(rng.next_binomial(shots, p)) / shots : p;
    }
    std::vector<int> shot_col;
    if (shots > 0) shot_col.assign(delays.size(), shots);
    const InitLabel label =
        model.kind == DecayModelSpec::Kind::joint_pair
            ? (c == 0 ? InitLabel::from_1 : InitLabel::from_0)
            : InitLabel::none;
    out.push_back(DecayTrace::from_measurement(delays, std::move(p1),
                                               std::move(shot_col), label));
  }
  return out;
}

// ---- synthetic flux scans ----

FluxScanDataset synth_flux_scan(const FluxoniumParams& qubit,
                                const NoiseEnvironment& env,
                                const std::vector<double>& flux_grid,
                                const std::vector<SequenceType>& sequences,
                                bool include_t1, const std::vector<TlsDip>& tls_dips,
                                std::uint64_t seed, double scatter_sigma_ln) {
  qubit.validate();
  env.validate();
  if (flux_grid.empty()) throw validation_error("synth_flux_scan: empty flux grid");
  for (double phi : flux_grid)
    if (!(phi >= 0.0 && phi <= 1.0))
      throw validation_error("synth_flux_scan: phi_ext outside one period");
  if (!(scatter_sigma_ln >= 0.0))
    throw validation_error("synth_flux_scan: negative scatter");

  struct Point {
    EigenSolution sol;
    MatrixElements elems;
    double dispersion = 0.0;
  };
  std::vector<Point> points;
  points.reserve(flux_grid.size());
  const bool need_dispersion = !sequences.empty();
  for (double phi : flux_grid) {
    Point pt{converged_spectrum(qubit, FluxBias{phi}, 2, 1e-9), {}, 0.0};
    pt.elems = matrix_elements(pt.sol, 0, 1);
    if (need_dispersion) pt.dispersion = flux_dispersion(qubit, FluxBias{phi});
    points.push_back(std::move(pt));
  }

  FluxScanDataset ds;
  ds.qubit = qubit;
  ds.idle_phi_ext = 0.5;
  KeyedRng scatter_rng(seed, 1);
  auto scattered = [&](double value) {
    const double v =
        scatter_sigma_ln > 0.0
            ? value * std::exp(scatter_sigma_ln * scatter_rng.next_gaussian())
            : value;
    return v;
  };

  if (include_t1) {
    std::vector<double> t1_values(flux_grid.size());
    for (std::size_t i = 0; i < flux_grid.size(); ++i) {
      double rate = 1.0 / t1_dielectric(points[i].sol, points[i].elems, env);
      if (env.x_qp > 0.0) {
        rate += t1_quasiparticle(points[i].sol, points[i].elems, env, QpChannel::jj);
        rate += t1_quasiparticle(points[i].sol, points[i].elems, env, QpChannel::jja);
      }
      t1_values[i] = 1.0 / rate;
    }
    for (const TlsDip& dip : tls_dips) {
      if (!(dip.suppression >= 1.0))
        throw validation_error("TLS dip suppression must be >= 1");
      std::size_t best = 0;
      for (std::size_t i = 1; i < flux_grid.size(); ++i)
        if (std::abs(flux_grid[i] - dip.phi_ext) <
            std::abs(flux_grid[best] - dip.phi_ext))
          best = i;
      t1_values[best] /= dip.suppression;
    }
    for (std::size_t i = 0; i < flux_grid.size(); ++i) {
      ScanRecord r;
      r.phi_ext = flux_grid[i];
      r.is_t1 = true;
      r.time_constant_us = scattered(t1_values[i]);
      r.err_us = 0.1 * r.time_constant_us;
      ds.records.push_back(r);
    }
  }

  for (const SequenceType& seq : sequences) {
    for (std::size_t i = 0; i < flux_grid.size(); ++i) {
      const double d_abs = std::abs(points[i].dispersion);
      const double gamma_w = 0.5 * d_abs * d_abs * env.a_white * env.a_white;
      double tphi;
      if (seq.is_ramsey()) {
        // u depends on t through the 1 Hz cutoff; iterate to self-consistency
        tphi = 1e4;
        for (int it = 0; it < 80; ++it) {
          const double u = filter_u_coefficient(seq, tphi);
          const double base = 1e-3 * d_abs * env.a_phi * u;
          const double next =
              std::min(2.0 / (gamma_w + std::sqrt(gamma_w * gamma_w +
                                                  4.0 * base * base)),
                       1e9);
          if (std::abs(next - tphi) <= 1e-10 * tphi) {
            tphi = next;
            break;
          }
          tphi = next;
        }
      } else {
        const double u = filter_u_coefficient(seq);
        const double base = 1e-3 * d_abs * env.a_phi * u;
        const double g2 = base * base;
        tphi = std::min(
            2.0 / (gamma_w + std::sqrt(gamma_w * gamma_w + 4.0 * g2)), 1e9);
      }
      ScanRecord r;
      r.phi_ext = flux_grid[i];
      r.is_t1 = false;
      r.seq = seq;
      r.time_constant_us = scattered(tphi);
      r.err_us = 0.1 * r.time_constant_us;
      ds.records.push_back(r);
    }
  }
  return ds;
}

}  // namespace fluxkit
