// test_trace_fit.cpp: fitter round trips on synthetic traces, degenerate
// inputs, and the nesting guarantee of the non-exponential model
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fluxkit/errors.hpp"
#include "fluxkit/noise_models.hpp"
#include "fluxkit/synth.hpp"
#include "fluxkit/trace_fit.hpp"

using namespace fluxkit;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

DecayTrace exp_trace(double a, double t1, double b, const std::vector<double>& t) {
  std::vector<double> p;
  for (double x : t) p.push_back(a * std::exp(-x / t1) + b);
  return DecayTrace::from_measurement(t, p);
}

}  // namespace

TEST_CASE("trace construction validation") {
  CHECK_THROWS_AS(DecayTrace::from_measurement({0.0, 1.0, 1.0}, {0.1, 0.2, 0.3}),
                  validation_error);  // not strictly ascending
  CHECK_THROWS_AS(DecayTrace::from_measurement({0.0, 1.0}, {0.1}),
                  validation_error);  // length mismatch
  CHECK_THROWS_AS(DecayTrace::from_measurement({0.0, 1.0}, {0.1, 1.2}),
                  validation_error);  // probability above 1
  CHECK_THROWS_AS(DecayTrace::from_measurement({}, {}), validation_error);
  CHECK_THROWS_AS(
      DecayTrace::from_measurement({0.0, 1.0}, {0.1, 0.2}, {100}),
      validation_error);  // shots length mismatch
  CHECK_THROWS_AS(
      DecayTrace::from_measurement({0.0, 1.0}, {0.1, 0.2}, {100, 0}),
      validation_error);  // nonpositive shots
  CHECK_NOTHROW(DecayTrace::from_measurement({0.0, 1.0}, {0.1, 0.2}, {100, 100}));
}

TEST_CASE("exponential fit recovers a noiseless trace") {
  const DecayTrace tr = exp_trace(0.55, 246.0, 0.12, linspace(0.0, 1200.0, 15));
  const FitResult fit = fit_exponential(tr);
  CHECK(fit.converged);
  CHECK(rel(fit.value("a"), 0.55) < 1e-6);
  CHECK(rel(fit.value("t1_us"), 246.0) < 1e-6);
  CHECK(rel(fit.value("b"), 0.12) < 1e-6);
  CHECK(fit.residual_norm < 1e-6);
  CHECK(fit.n_points == 15);
}

TEST_CASE("exponential fit is deterministic") {
  const DecayTrace tr = exp_trace(0.7, 90.0, 0.05, linspace(0.0, 400.0, 12));
  const FitResult a = fit_exponential(tr);
  const FitResult b = fit_exponential(tr);
  CHECK(a.value("t1_us") == b.value("t1_us"));
  CHECK(a.residual_norm == b.residual_norm);
}

TEST_CASE("exponential fit rejects short traces") {
  CHECK_THROWS_AS(fit_exponential(exp_trace(0.5, 100.0, 0.1, linspace(0, 10, 3))),
                  validation_error);
}

TEST_CASE("constant trace degrades to an offset-only result") {
  const DecayTrace tr =
      DecayTrace::from_measurement(linspace(0, 100, 8), std::vector<double>(8, 0.31));
  const FitResult fit = fit_exponential(tr);
  CHECK_FALSE(fit.has("t1_us"));
  CHECK(fit.value("b") == doctest::Approx(0.31).epsilon(1e-12));
  REQUIRE(fit.notes.size() >= 1);
  CHECK(fit.notes[0].find("degenerate") != std::string::npos);
}

TEST_CASE("exponential fit handles binomial sampling noise") {
  DecayModelSpec model;
  model.a = 0.85;
  model.b = 0.05;
  model.t1 = 500.0;
  const auto traces = synth_decay_trace(model, linspace(0.0, 2000.0, 21), 2000, 42);
  REQUIRE(traces.size() == 1);
  const FitResult fit = fit_exponential(traces[0]);
  CHECK(fit.converged);
  CHECK(rel(fit.value("t1_us"), 500.0) < 0.10);
  CHECK(std::abs(fit.value("b") - 0.05) < 0.05);
  CHECK(fit.error("t1_us") > 0.0);
}

TEST_CASE("joint T1 fit recovers shared decay and temperature") {
  // 197 MHz device at 18.7 mK: thermal offset b ~ 0.376.
  const double f01 = 0.197;
  const double b = thermal_population(f01, 0.0187);
  const std::vector<double> t = linspace(0.0, 4200.0, 16);
  std::vector<double> p1, p0;
  for (double x : t) {
    p1.push_back(0.62 * std::exp(-x / 1168.0) + b);
    p0.push_back(-0.37 * std::exp(-x / 1168.0) + b);
  }
  const DecayTrace tr1 =
      DecayTrace::from_measurement(t, p1, {}, InitLabel::from_1);
  const DecayTrace tr0 =
      DecayTrace::from_measurement(t, p0, {}, InitLabel::from_0);

  const FitResult fit = fit_joint_t1(tr1, tr0, f01);
  CHECK(fit.converged);
  CHECK(rel(fit.value("t1_us"), 1168.0) < 1e-6);
  CHECK(rel(fit.value("a1"), 0.62) < 1e-6);
  CHECK(rel(fit.value("a2"), -0.37) < 1e-5);
  CHECK(rel(fit.value("b"), b) < 1e-6);
  CHECK(rel(fit.value("temp_mk"), 18.7) < 1e-5);

  // Argument order swap relabels the amplitudes but not the shared decay.
  const FitResult swapped = fit_joint_t1(tr0, tr1, f01);
  CHECK(rel(swapped.value("t1_us"), fit.value("t1_us")) < 1e-9);
  CHECK(rel(swapped.value("a1"), fit.value("a2")) < 1e-5);
  CHECK(rel(swapped.value("a2"), fit.value("a1")) < 1e-5);

  // Pinning the offset at its true value reproduces the free fit.
  const FitResult pinned = fit_joint_t1(tr1, tr0, f01, b);
  CHECK(rel(pinned.value("t1_us"), 1168.0) < 1e-6);
  CHECK(pinned.value("b") == doctest::Approx(b).epsilon(1e-12));
  CHECK(pinned.error("b") == 0.0);
}

TEST_CASE("joint T1 fit validates its inputs") {
  const std::vector<double> t = linspace(0.0, 100.0, 6);
  std::vector<double> p(6);
  for (int i = 0; i < 6; ++i) p[i] = 0.5 * std::exp(-t[i] / 40.0) + 0.1;
  const DecayTrace labeled = DecayTrace::from_measurement(t, p, {}, InitLabel::from_1);
  CHECK_THROWS_AS(fit_joint_t1(labeled, labeled), validation_error);

  // Offset outside (0, 0.5): no temperature mapping, flagged instead.
  std::vector<double> p1, p0;
  for (double x : t) {
    p1.push_back(0.4 * std::exp(-x / 40.0) + 0.55);
    p0.push_back(-0.2 * std::exp(-x / 40.0) + 0.55);
  }
  const FitResult fit = fit_joint_t1(
      DecayTrace::from_measurement(t, p1, {}, InitLabel::from_1),
      DecayTrace::from_measurement(t, p0, {}, InitLabel::from_0), 0.197);
  CHECK_FALSE(fit.has("temp_mk"));
  bool flagged = false;
  for (const auto& n : fit.notes) flagged |= n.find("offset") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("joint T1 fit tolerates shot noise at the 5% level") {
  DecayModelSpec model;
  model.kind = DecayModelSpec::Kind::joint_pair;
  model.a = 0.62;
  model.a2 = -0.37;
  model.b = thermal_population(0.197, 0.0187);
  model.t1 = 1168.0;
  const auto traces =
      synth_decay_trace(model, linspace(0.0, 4200.0, 16), 3000, 7);
  REQUIRE(traces.size() == 2);
  const FitResult fit = fit_joint_t1(traces[0], traces[1], 0.197);
  CHECK(rel(fit.value("t1_us"), 1168.0) < 0.05);
  CHECK(rel(fit.value("temp_mk"), 18.7) < 0.05);
}

TEST_CASE("Bloch envelope reconstruction is exact per delay") {
  const std::vector<double> t = linspace(0.0, 600.0, 13);
  const double kPi = 3.14159265358979323846;
  const std::vector<double> phases = {0.0, kPi / 3.0, 2.0 * kPi / 3.0};
  auto amp = [](double x) { return 0.42 * std::exp(-(x / 300.0) * (x / 300.0)); };
  auto ang = [](double x) { return 0.3 + 0.01 * x; };

  DephasingTriple triple;
  std::vector<std::vector<double>> p(3);
  for (double x : t)
    for (int k = 0; k < 3; ++k)
      p[k].push_back(0.5 + amp(x) * std::cos(ang(x) - phases[k]));
  triple.phase_0 = DecayTrace::from_measurement(t, p[0]);
  triple.phase_60 = DecayTrace::from_measurement(t, p[1]);
  triple.phase_120 = DecayTrace::from_measurement(t, p[2]);

  const DecayTrace env = bloch_envelope(triple);
  REQUIRE(env.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(rel(env.p1[i], amp(t[i])) < 1e-12);

  // A common offset shift leaves the envelope untouched.
  DephasingTriple shifted = triple;
  for (auto* tr : {&shifted.phase_0, &shifted.phase_60, &shifted.phase_120})
    for (double& v : tr->p1) v += 0.03;
  const DecayTrace env2 = bloch_envelope(shifted);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(rel(env2.p1[i], amp(t[i])) < 1e-11);

  // Mismatched grids are rejected.
  DephasingTriple bad = triple;
  bad.phase_120.delays[2] += 0.5;
  CHECK_THROWS_AS(bloch_envelope(bad), validation_error);
}

TEST_CASE("pure-exponential dephasing fit recovers T2") {
  const std::vector<double> t = linspace(2.0, 2400.0, 14);
  std::vector<double> p;
  for (double x : t) p.push_back(0.8 * std::exp(-x / 943.0));
  const DecayTrace env = DecayTrace::from_measurement(t, p);
  const FitResult fit =
      fit_gaussian_dephasing(env, 1070.0, SequenceType::cpmg(1), false, true);
  CHECK(fit.converged);
  CHECK(rel(fit.value("t2_us"), 943.0) < 1e-6);
  CHECK(fit.model_id.find("cpmg1") != std::string::npos);
}

TEST_CASE("Gaussian dephasing fit separates T1, white, and 1/f factors") {
  const double t1_ref = 1070.0, tphi = 500.0, gamma_w = 0.004;
  const std::vector<double> t = linspace(1.0, 900.0, 16);

  std::vector<double> pure, with_white;
  for (double x : t) {
    const double core = 0.93 * std::exp(-x / (2.0 * t1_ref)) *
                        std::exp(-(x / tphi) * (x / tphi));
    pure.push_back(core);
    with_white.push_back(core * std::exp(-gamma_w * x));
  }

  const FitResult fit = fit_gaussian_dephasing(
      DecayTrace::from_measurement(t, pure), t1_ref, SequenceType::cpmg(1), false);
  CHECK(rel(fit.value("tphi_us"), tphi) < 1e-6);
  CHECK(rel(fit.value("a"), 0.93) < 1e-6);
  CHECK_FALSE(fit.has("gamma_w_per_us"));

  const FitResult fw = fit_gaussian_dephasing(
      DecayTrace::from_measurement(t, with_white), t1_ref, SequenceType::cpmg(1), true);
  CHECK(rel(fw.value("tphi_us"), tphi) < 1e-5);
  CHECK(rel(fw.value("gamma_w_per_us"), gamma_w) < 1e-4);

  // White term on white-free data: consistent with zero.
  const FitResult f0 = fit_gaussian_dephasing(
      DecayTrace::from_measurement(t, pure), t1_ref, SequenceType::cpmg(1), true);
  CHECK(std::abs(f0.value("gamma_w_per_us")) <
        std::max(3.0 * f0.error("gamma_w_per_us"), 1e-6));
}

TEST_CASE("rising envelopes are flagged") {
  const std::vector<double> t = linspace(0.0, 100.0, 8);
  std::vector<double> p;
  for (double x : t) p.push_back(0.2 + 0.005 * x);
  const FitResult fit = fit_gaussian_dephasing(
      DecayTrace::from_measurement(t, p), 1000.0, SequenceType::cpmg(1), false, true);
  bool flagged = false;
  for (const auto& n : fit.notes)
    flagged |= n.find("increases") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("non-exponential fit recovers the quasiparticle-number model") {
  // P1(t) = a exp[n (e^{-t/T1_tilde} - 1)] e^{-t/T1} + b
  const double a = 0.93, n = 1.219, t1t = 246.0, t1 = 1464.0, b = 0.02;
  const std::vector<double> t = linspace(0.0, 2600.0, 25);
  std::vector<double> p;
  for (double x : t)
    p.push_back(a * std::exp(n * (std::exp(-x / t1t) - 1.0)) * std::exp(-x / t1) + b);
  const FitResult fit = fit_nonexponential(DecayTrace::from_measurement(t, p));
  CHECK(fit.converged);
  CHECK(rel(fit.value("n"), n) < 1e-5);
  CHECK(rel(fit.value("t1_tilde_us"), t1t) < 1e-5);
  CHECK(rel(fit.value("t1_us"), t1) < 1e-5);
  CHECK(rel(fit.value("a"), a) < 1e-5);
  REQUIRE(fit.exp_residual_norm.has_value());
  // The extra structure must improve on the plain exponential here.
  CHECK(fit.residual_norm < 0.5 * *fit.exp_residual_norm);
}

TEST_CASE("non-exponential fit pins n to zero on exponential data") {
  const DecayTrace tr = exp_trace(0.85, 500.0, 0.05, linspace(0.0, 2000.0, 21));
  const FitResult fit = fit_nonexponential(tr);
  CHECK(fit.value("n") == 0.0);
  CHECK_FALSE(fit.has("t1_tilde_us"));
  CHECK(rel(fit.value("t1_us"), 500.0) < 1e-6);
  bool flagged = false;
  for (const auto& nmsg : fit.notes)
    flagged |= nmsg.find("pinned") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("non-exponential residual never exceeds the exponential reference") {
  // Noisy data, both generating models: the richer model nests the simpler.
  for (int variant = 0; variant < 2; ++variant) {
    DecayModelSpec model;
    if (variant == 1) {
      model.kind = DecayModelSpec::Kind::nonexponential;
      model.n = 1.2;
      model.t1_tilde = 240.0;
      model.t1 = 1460.0;
    } else {
      model.t1 = 700.0;
    }
    model.a = 0.9;
    model.b = 0.03;
    const auto traces =
        synth_decay_trace(model, linspace(0.0, 3000.0, 26), 1500, 11 + variant);
    const FitResult fit = fit_nonexponential(traces[0]);
    REQUIRE(fit.exp_residual_norm.has_value());
    CHECK(fit.residual_norm <= *fit.exp_residual_norm * (1.0 + 1e-9));
  }
}

TEST_CASE("non-exponential fit rejects short traces") {
  CHECK_THROWS_AS(
      fit_nonexponential(exp_trace(0.5, 100.0, 0.1, linspace(0, 50, 5))),
      validation_error);
}
