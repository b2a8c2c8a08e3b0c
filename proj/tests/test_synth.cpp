// test_synth.cpp: trajectory synthesis normalization, Monte Carlo dephasing,
// and deterministic dataset generation
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fluxkit/errors.hpp"
#include "fluxkit/noise_models.hpp"
#include "fluxkit/synth.hpp"

using namespace fluxkit;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

FluxoniumParams device_g() { return FluxoniumParams{"G", 1.212, 5.315, 0.547}; }

}  // namespace

TEST_CASE("trajectory spec validation and effective band") {
  NoiseTrajectorySpec spec;
  spec.duration = 100.0;
  spec.dt = 0.1;
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.f_low_effective() == doctest::Approx(1e6 / 1000.0).epsilon(1e-12));
  CHECK(spec.f_high_effective() == doctest::Approx(5e5 / 0.1).epsilon(1e-12));

  spec.f_low = 2e7;  // above Nyquist
  CHECK_THROWS_AS(spec.validate(), validation_error);
  spec = NoiseTrajectorySpec{};
  spec.duration = 0.0;
  spec.dt = 0.1;
  CHECK_THROWS_AS(spec.validate(), validation_error);
  spec = NoiseTrajectorySpec{};
  spec.duration = 10.0;
  spec.dt = 0.0;
  CHECK_THROWS_AS(spec.validate(), validation_error);
}

TEST_CASE("trajectory synthesis is bit-deterministic per seed") {
  NoiseTrajectorySpec spec;
  spec.duration = 50.0;
  spec.dt = 0.05;
  spec.seed = 9001;
  const std::vector<double> a = synth_1f_noise(spec);
  const std::vector<double> b = synth_1f_noise(spec);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == 1000);
  CHECK(a == b);

  spec.seed = 9002;
  const std::vector<double> c = synth_1f_noise(spec);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i] != c[i];
  CHECK(any_diff);
  for (double v : a) CHECK(std::isfinite(v));
}

TEST_CASE("trajectory variance matches the band-integrated PSD") {
  // Var[x] = 2 A^2 sum(df / f) over the synthesized band (double-sided PSD
  // folded onto positive frequencies). Ensemble over seeds.
  NoiseTrajectorySpec spec;
  spec.a_phi = 1.0;
  spec.duration = 100.0;
  spec.dt = 0.1;

  const int n_record = 10000;  // record extends to 1/f_low = 1000 us
  const double df = 1e6 / (n_record * spec.dt);
  double expected = 0.0;
  for (int k = 1; k <= n_record / 2; ++k) {
    const double f = k * df;
    if (f >= spec.f_low_effective() * (1.0 - 1e-12) &&
        f <= spec.f_high_effective() * (1.0 + 1e-12))
      expected += 2.0 * df / f;
  }

  const int n_seeds = 400;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    spec.seed = 100 + s;
    const double x0 = synth_1f_noise(spec)[0];
    sum += x0;
    sum2 += x0 * x0;
  }
  const double var = sum2 / n_seeds - (sum / n_seeds) * (sum / n_seeds);
  CHECK(rel(var, expected) < 0.25);  // ~7% statistical spread at 400 samples
}

TEST_CASE("Monte Carlo echo envelope follows the analytic Gaussian") {
  NoiseTrajectorySpec spec;
  spec.a_phi = 2.43;
  spec.duration = 600.0;
  spec.dt = 0.15;
  spec.seed = 31;
  const double d = 1.0;  // rad*GHz/Phi0
  const SequenceType echo = SequenceType::cpmg(1);
  const double u = filter_u_coefficient(echo);
  const double t_e = 1000.0 / (spec.a_phi * u);  // 1/e point of exp(-(1e-3 t D A u)^2)

  const EnsembleResult mc =
      simulate_dephasing(spec, d, echo, {0.0, 120.0, t_e}, 2000, 5);
  REQUIRE(mc.envelope.size() == 3);
  CHECK(mc.envelope[0] == 1.0);
  const double g120 = 1e-3 * 120.0 * d * spec.a_phi * u;
  CHECK(std::abs(mc.envelope[1] - std::exp(-g120 * g120)) < 0.03);
  CHECK(std::abs(mc.envelope[2] - std::exp(-1.0)) < 0.05);
  CHECK(mc.n_trajectories == 2000);
  for (double se : mc.std_err) CHECK(se >= 0.0);
}

TEST_CASE("Monte Carlo ensemble is deterministic and scales as 1/sqrt(n)") {
  NoiseTrajectorySpec spec;
  spec.a_phi = 2.0;
  spec.duration = 120.0;
  spec.dt = 0.2;
  spec.seed = 77;
  const std::vector<double> delays = {30.0, 90.0};

  const EnsembleResult a =
      simulate_dephasing(spec, 0.8, SequenceType::cpmg(2), delays, 400, 3);
  const EnsembleResult b =
      simulate_dephasing(spec, 0.8, SequenceType::cpmg(2), delays, 400, 3);
  CHECK(a.envelope == b.envelope);
  CHECK(a.std_err == b.std_err);

  const EnsembleResult big =
      simulate_dephasing(spec, 0.8, SequenceType::cpmg(2), delays, 1600, 3);
  const double ratio = a.std_err[1] / big.std_err[1];
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.9);
}

TEST_CASE("Ramsey decays faster than echo under 1/f noise") {
  NoiseTrajectorySpec spec;
  spec.a_phi = 2.43;
  spec.duration = 400.0;
  spec.dt = 0.2;
  spec.seed = 13;
  const std::vector<double> delays = {120.0};
  const EnsembleResult ramsey =
      simulate_dephasing(spec, 1.0, SequenceType::ramsey(), delays, 600, 2);
  const EnsembleResult echo =
      simulate_dephasing(spec, 1.0, SequenceType::cpmg(1), delays, 600, 2);
  CHECK(ramsey.envelope[0] < echo.envelope[0]);
}

TEST_CASE("Monte Carlo argument checks") {
  NoiseTrajectorySpec spec;
  spec.duration = 50.0;
  spec.dt = 0.1;
  CHECK_THROWS_AS(
      simulate_dephasing(spec, 1.0, SequenceType::cpmg(1), {10.0}, 50, 1),
      validation_error);  // too few trajectories
  CHECK_THROWS_AS(
      simulate_dephasing(spec, 1.0, SequenceType::cpmg(1), {60.0}, 200, 1),
      validation_error);  // delay beyond the record
}

TEST_CASE("synthetic decay traces evaluate the exact model when noiseless") {
  const std::vector<double> t = linspace(0.0, 900.0, 10);

  DecayModelSpec expo;
  expo.a = 0.8;
  expo.b = 0.1;
  expo.t1 = 300.0;
  const auto tr = synth_decay_trace(expo, t, 0, 1);
  REQUIRE(tr.size() == 1);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(rel(tr[0].p1[i], 0.8 * std::exp(-t[i] / 300.0) + 0.1) < 1e-14);
  CHECK(tr[0].shots.empty());

  DecayModelSpec joint = expo;
  joint.kind = DecayModelSpec::Kind::joint_pair;
  joint.a = 0.6;
  joint.a2 = -0.3;
  joint.b = 0.37;
  const auto pair = synth_decay_trace(joint, t, 0, 1);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].init_label == InitLabel::from_1);
  CHECK(pair[1].init_label == InitLabel::from_0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(rel(pair[0].p1[i], 0.6 * std::exp(-t[i] / 300.0) + 0.37) < 1e-14);
    CHECK(rel(pair[1].p1[i], -0.3 * std::exp(-t[i] / 300.0) + 0.37) < 1e-14);
  }

  DecayModelSpec nonexp = expo;
  nonexp.kind = DecayModelSpec::Kind::nonexponential;
  nonexp.n = 1.2;
  nonexp.t1_tilde = 120.0;
  const auto ntr = synth_decay_trace(nonexp, t, 0, 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double expect = 0.8 *
                              std::exp(1.2 * (std::exp(-t[i] / 120.0) - 1.0)) *
                              std::exp(-t[i] / 300.0) +
                          0.1;
    CHECK(rel(ntr[0].p1[i], expect) < 1e-14);
  }

  DecayModelSpec chi = expo;
  chi.kind = DecayModelSpec::Kind::composite_chi;
  chi.seq = SequenceType::cpmg(2);
  chi.d_coeff = 0.9;
  chi.env.a_phi = 2.43;
  chi.env.a_white = 0.05;
  const auto ctr = synth_decay_trace(chi, t, 0, 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double expect =
        0.8 * dephasing_envelope(chi.seq, 0.9, chi.env, t[i], 300.0) + 0.1;
    CHECK(rel(ctr[0].p1[i], expect) < 1e-14);
  }
}

TEST_CASE("synthetic traces reject out-of-range probabilities") {
  DecayModelSpec bad;
  bad.a = 1.2;  // p(0) = 1.2
  CHECK_THROWS_AS(synth_decay_trace(bad, linspace(0, 10, 5), 0, 1),
                  validation_error);
}

TEST_CASE("binomial sampling is deterministic and unbiased") {
  DecayModelSpec model;
  model.a = 0.7;
  model.b = 0.1;
  model.t1 = 200.0;
  const std::vector<double> t = linspace(0.0, 400.0, 9);
  const auto a = synth_decay_trace(model, t, 500, 99);
  const auto b = synth_decay_trace(model, t, 500, 99);
  CHECK(a[0].p1 == b[0].p1);
  CHECK(a[0].shots == std::vector<int>(9, 500));

  // Each sampled point sits within 5 binomial sigmas of the model.
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double p = 0.7 * std::exp(-t[i] / 200.0) + 0.1;
    const double sig = std::sqrt(p * (1.0 - p) / 500.0);
    CHECK(std::abs(a[0].p1[i] - p) < 5.0 * sig);
  }
}

TEST_CASE("synthetic flux scan forward-models every record") {
  const FluxoniumParams q = device_g();
  NoiseEnvironment env;
  env.tan_delta_c = 2.5e-6;
  env.temp = 0.0187;
  env.a_phi = 2.43;
  env.x_qp = 3e-7;
  const std::vector<double> grid = {0.46, 0.48, 0.5};
  const std::vector<SequenceType> seqs = {SequenceType::cpmg(1),
                                          SequenceType::cpmg(4)};

  const FluxScanDataset ds =
      synth_flux_scan(q, env, grid, seqs, true, {}, 5, 0.0);
  CHECK_NOTHROW(ds.validate());
  REQUIRE(ds.records.size() == grid.size() * 3);  // t1 + two sequences
  CHECK(ds.idle_phi_ext == 0.5);
  CHECK(ds.qubit.label == "G");

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const EigenSolution sol = converged_spectrum(q, FluxBias{grid[i]}, 2, 1e-9);
    const MatrixElements me = matrix_elements(sol, 0, 1);
    double rate = 1.0 / t1_dielectric(sol, me, env);
    rate += t1_quasiparticle(sol, me, env, QpChannel::jj);
    rate += t1_quasiparticle(sol, me, env, QpChannel::jja);
    CHECK(ds.records[i].is_t1);
    CHECK(rel(ds.records[i].time_constant_us, 1.0 / rate) < 1e-9);
    CHECK(rel(ds.records[i].err_us, 0.1 / rate) < 1e-9);

    // CPMG dephasing records solve Gamma_w t + g2 t^2 = 1 in closed form.
    const double d = std::abs(flux_dispersion(q, FluxBias{grid[i]}));
    const double base =
        1e-3 * d * env.a_phi * filter_u_coefficient(SequenceType::cpmg(1));
    const double tphi = 2.0 / std::sqrt(4.0 * base * base);
    const ScanRecord& rec = ds.records[grid.size() + i];
    CHECK_FALSE(rec.is_t1);
    CHECK(rec.seq.n_pulses == 1);
    CHECK(rel(rec.time_constant_us, std::min(tphi, 1e9)) < 1e-9);
  }

  // More pulses filter more noise: cpmg4 outlives cpmg1 off the sweet spot.
  CHECK(ds.records[grid.size()].time_constant_us <
        ds.records[2 * grid.size()].time_constant_us + 1e-9);
}

TEST_CASE("TLS dips divide T1 at the nearest grid point") {
  const FluxoniumParams q = device_g();
  NoiseEnvironment env;
  env.tan_delta_c = 2.5e-6;
  const std::vector<double> grid = linspace(0.45, 0.55, 11);

  const FluxScanDataset clean =
      synth_flux_scan(q, env, grid, {}, true, {}, 5, 0.0);
  const FluxScanDataset dipped =
      synth_flux_scan(q, env, grid, {}, true, {TlsDip{0.4705, 5.0}}, 5, 0.0);
  REQUIRE(clean.records.size() == dipped.records.size());
  // 0.4705 snaps to grid index 2 (phi = 0.47).
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double expect =
        (i == 2) ? clean.records[i].time_constant_us / 5.0
                 : clean.records[i].time_constant_us;
    CHECK(rel(dipped.records[i].time_constant_us, expect) < 1e-12);
  }
}

TEST_CASE("scan scatter is lognormal, seeded, and reproducible") {
  const FluxoniumParams q = device_g();
  NoiseEnvironment env;
  env.tan_delta_c = 2.5e-6;
  const std::vector<double> grid = linspace(0.45, 0.55, 21);

  const FluxScanDataset a = synth_flux_scan(q, env, grid, {}, true, {}, 5, 0.10);
  const FluxScanDataset b = synth_flux_scan(q, env, grid, {}, true, {}, 5, 0.10);
  const FluxScanDataset c = synth_flux_scan(q, env, grid, {}, true, {}, 6, 0.10);
  const FluxScanDataset clean = synth_flux_scan(q, env, grid, {}, true, {}, 5, 0.0);
  bool seed_differs = false, scatter_present = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(a.records[i].time_constant_us == b.records[i].time_constant_us);
    seed_differs |= a.records[i].time_constant_us != c.records[i].time_constant_us;
    const double lr = std::log(a.records[i].time_constant_us /
                               clean.records[i].time_constant_us);
    scatter_present |= lr != 0.0;
    CHECK(std::abs(lr) < 0.5);  // 5 sigma at sigma_ln = 0.10
  }
  CHECK(seed_differs);
  CHECK(scatter_present);
}

TEST_CASE("flux scan validation") {
  const FluxoniumParams q = device_g();
  NoiseEnvironment env;
  CHECK_THROWS_AS(synth_flux_scan(q, env, {}, {}, true, {}, 1, 0.1),
                  validation_error);
  CHECK_THROWS_AS(synth_flux_scan(q, env, {1.2}, {}, true, {}, 1, 0.1),
                  validation_error);
  CHECK_THROWS_AS(
      synth_flux_scan(q, env, {0.5}, {}, true, {TlsDip{0.5, 0.5}}, 1, 0.1),
      validation_error);
}
