// fluxkit_main.cpp: command line front end
//
// Exit codes: 0 success, 2 input/validation problems, 3 solver failures,
// 4 fit non-convergence. All file outputs are atomic and carry the config
// hash and seed, so identical invocations produce identical bytes.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fluxkit/errors.hpp"
#include "fluxkit/io.hpp"
#include "fluxkit/noise_extract.hpp"
#include "fluxkit/noise_models.hpp"
#include "fluxkit/qubit_model.hpp"
#include "fluxkit/synth.hpp"
#include "fluxkit/trace_fit.hpp"
#include "fluxkit/wafer.hpp"

namespace {

using fluxkit::validation_error;
using json = nlohmann::ordered_json;

struct Global {
  std::uint64_t seed = 12345;
  bool quiet = false;
  std::string config_line;  // canonical invocation, hashed into outputs
};

std::vector<std::string> provenance_lines(const Global& g) {
  return {"config=" + fluxkit::hash_string(fluxkit::config_hash(g.config_line)),
          "seed=" + std::to_string(g.seed)};
}

void attach_provenance(json& doc, const Global& g) {
  doc["config_hash"] = fluxkit::hash_string(fluxkit::config_hash(g.config_line));
  doc["seed"] = g.seed;
}

void write_json(const std::string& path, const json& doc, const Global& g) {
  fluxkit::atomic_write(path, doc.dump(2) + "\n");
  if (!g.quiet) std::cout << "wrote " << path << "\n";
}

void note_written(const std::string& path, const Global& g) {
  if (!g.quiet) std::cout << "wrote " << path << "\n";
}

json fit_to_json(const fluxkit::FitResult& fit) {
  json doc;
  doc["model_id"] = fit.model_id;
  json params = json::object();
  for (const auto& [name, par] : fit.parameters) {
    params[name] = {{"value", par.value}, {"stderr", par.stderr_}};
  }
  doc["parameters"] = params;
  doc["residual_norm"] = fit.residual_norm;
  doc["converged"] = fit.converged;
  doc["n_points"] = fit.n_points;
  doc["notes"] = fit.notes;
  if (fit.exp_residual_norm) doc["exp_residual_norm"] = *fit.exp_residual_norm;
  return doc;
}

json report_to_json(const fluxkit::ExtractionReport& rep) {
  json doc;
  auto param = [](const fluxkit::FitParam& p) {
    return json{{"value", p.value}, {"stderr", p.stderr_}};
  };
  if (rep.tan_delta_finite_t)
    doc["tan_delta_finite_t"] = param(*rep.tan_delta_finite_t);
  if (rep.tan_delta_t0) doc["tan_delta_t0"] = param(*rep.tan_delta_t0);
  if (rep.a_phi) doc["a_phi_uphi0"] = param(*rep.a_phi);
  if (rep.a_white) doc["a_white"] = param(*rep.a_white);
  doc["residuals"] = rep.residuals;
  json masked = json::array();
  for (const auto& mp : rep.masked) {
    masked.push_back({{"record_index", mp.record_index},
                      {"phi_ext", mp.phi_ext},
                      {"model_over_data", mp.model_over_data},
                      {"reason", mp.reason}});
  }
  doc["masked"] = masked;
  doc["notes"] = rep.notes;
  return doc;
}

fluxkit::SequenceType parse_sequence(const std::string& token) {
  if (token == "ramsey") return fluxkit::SequenceType::ramsey();
  if (token.rfind("cpmg", 0) == 0) {
    try {
      return fluxkit::SequenceType::cpmg(std::stoi(token.substr(4)));
    } catch (const std::exception&) {
      throw validation_error("bad sequence token '" + token + "'");
    }
  }
  throw validation_error("bad sequence token '" + token +
                         "' (expected ramsey or cpmg<N>)");
}

std::vector<double> grid_from(const std::vector<double>& spec3) {
  const int n = static_cast<int>(spec3[2]);
  if (n < 1 || spec3[2] != n)
    throw validation_error("grid count must be a positive integer");
  if (n == 1) return {spec3[0]};
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = spec3[0] + (spec3[1] - spec3[0]) * i / (n - 1);
  return g;
}

// ---- subcommand states ----

struct SpectrumArgs {
  std::string qubit_file, out;
  std::vector<double> sweep;  // lo hi n
  double phi = 0.5;
  int levels = 2;
};

void run_spectrum(const SpectrumArgs& a, const Global& g) {
  const fluxkit::FluxoniumParams qubit = fluxkit::load_qubit_file(a.qubit_file);
  for (const std::string& w : qubit.warnings())
    if (!g.quiet) std::cout << "warning: " << w << "\n";

  std::vector<fluxkit::FluxBias> grid;
  if (!a.sweep.empty()) {
    for (double phi : grid_from(a.sweep)) grid.push_back({phi});
  } else {
    grid.push_back({a.phi});
  }
  const auto rows = fluxkit::spectrum_sweep(qubit, grid, a.levels);

  std::ostringstream header;
  header << "phi_ext";
  for (int k = 1; k < std::max(2, a.levels); ++k) header << ",f0" << k << "_ghz";
  header << ",abs_phi_01,abs_sin_half_phi_01,dispersion_radghz_per_phi0,basis";
  std::vector<std::string> lines;
  for (const auto& r : rows) {
    std::ostringstream os;
    os << fluxkit::format_double(r.phi_ext);
    for (double f : r.transitions) os << "," << fluxkit::format_double(f);
    os << "," << fluxkit::format_double(r.abs_phi_01) << ","
       << fluxkit::format_double(r.abs_sin_half_phi_01) << ","
       << fluxkit::format_double(r.dispersion) << "," << r.basis_size;
    lines.push_back(os.str());
  }
  fluxkit::write_csv(a.out, provenance_lines(g), header.str(), lines);
  note_written(a.out, g);
}

struct FitArgs {
  std::string mode;  // exp | joint | nonexp | dephasing
  std::string trace_file, trace0_file, triple_file, out;
  std::string sequence = "cpmg1";
  double f01 = 0.0, fix_b = 0.0, t1_ref = 0.0;
  bool have_f01 = false, have_fix_b = false;
  bool white = false, pure = false;
};

void run_fit(const FitArgs& a, const Global& g) {
  fluxkit::FitResult fit;
  if (a.mode == "exp" || a.mode == "nonexp") {
    const fluxkit::DecayTrace tr = fluxkit::load_trace_csv(a.trace_file);
    fit = a.mode == "exp" ? fluxkit::fit_exponential(tr)
                          : fluxkit::fit_nonexponential(tr);
  } else if (a.mode == "joint") {
    const fluxkit::DecayTrace tr1 =
        fluxkit::load_trace_csv(a.trace_file, fluxkit::InitLabel::from_1);
    const fluxkit::DecayTrace tr0 =
        fluxkit::load_trace_csv(a.trace0_file, fluxkit::InitLabel::from_0);
    fit = fluxkit::fit_joint_t1(
        tr1, tr0,
        a.have_f01 ? std::optional<double>(a.f01) : std::nullopt,
        a.have_fix_b ? std::optional<double>(a.fix_b) : std::nullopt);
  } else {  // dephasing
    if (!(a.t1_ref > 0.0) && !a.pure)
      throw validation_error("fit dephasing requires --t1 unless --pure");
    fluxkit::DecayTrace env;
    if (!a.triple_file.empty()) {
      env = fluxkit::bloch_envelope(fluxkit::load_triple_csv(a.triple_file));
    } else {
      env = fluxkit::load_trace_csv(a.trace_file);
    }
    fit = fluxkit::fit_gaussian_dephasing(env, a.pure ? 1.0 : a.t1_ref,
                                          parse_sequence(a.sequence), a.white,
                                          a.pure);
  }
  json doc = fit_to_json(fit);
  attach_provenance(doc, g);
  write_json(a.out, doc, g);
}

struct ExtractArgs {
  std::string mode;  // tandelta | fluxnoise
  std::vector<std::string> scan_files;
  std::string qubit_file, out;
  std::string variant = "finite";
  double temp_mk = 0.0, asymmetry = 10.0;
  bool robust = false;
};

void run_extract(const ExtractArgs& a, const Global& g) {
  const fluxkit::FluxoniumParams qubit = fluxkit::load_qubit_file(a.qubit_file);
  fluxkit::ExtractionReport rep;
  if (a.mode == "tandelta") {
    const auto scan = fluxkit::load_scan_csv(a.scan_files.at(0), qubit);
    fluxkit::TanDeltaOptions opt;
    opt.asymmetry = a.asymmetry;
    opt.robust_clip = a.robust;
    const auto variant = [&] {
      if (a.variant == "finite") return fluxkit::TanDeltaVariant::finite_t;
      if (a.variant == "t0") return fluxkit::TanDeltaVariant::tls_t0;
      throw validation_error("variant must be finite or t0");
    }();
    rep = fluxkit::extract_tan_delta(scan, 1e-3 * a.temp_mk, variant, opt);
  } else {  // fluxnoise
    std::vector<fluxkit::FluxScanDataset> scans;
    for (const std::string& path : a.scan_files)
      scans.push_back(fluxkit::load_scan_csv(path, qubit));
    rep = fluxkit::extract_flux_noise(scans);
  }
  json doc = report_to_json(rep);
  attach_provenance(doc, g);
  write_json(a.out, doc, g);
}

struct SynthArgs {
  std::string mode;  // scan | trace | trajectory
  std::string qubit_file, noise_file, out, out0;
  std::vector<double> grid;    // lo hi n
  std::vector<double> delays;  // lo hi n
  std::string sequences = "t1";
  std::vector<std::string> dips;
  double scatter = 0.10;
  // trace model
  std::string kind = "exp";
  double a = 0.9, b = 0.0, t1 = 1000.0, a2 = 0.0, n = 0.0, t1_tilde = 0.0;
  double d_coeff = 0.0;
  int shots = 0;
  // trajectory
  double a_phi = 1.0, duration = 0.0, dt = 0.0;
};

void run_synth(const SynthArgs& a, const Global& g) {
  if (a.mode == "scan") {
    const fluxkit::FluxoniumParams qubit = fluxkit::load_qubit_file(a.qubit_file);
    const fluxkit::NoiseEnvironment env = fluxkit::load_noise_file(a.noise_file);
    bool include_t1 = false;
    std::vector<fluxkit::SequenceType> seqs;
    std::stringstream ss(a.sequences);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token == "t1")
        include_t1 = true;
      else
        seqs.push_back(parse_sequence(token));
    }
    std::vector<fluxkit::TlsDip> dips;
    for (const std::string& d : a.dips) {
      const auto colon = d.find(':');
      if (colon == std::string::npos)
        throw validation_error("dip spec must be phi:suppression");
      try {
        dips.push_back({std::stod(d.substr(0, colon)),
                        std::stod(d.substr(colon + 1))});
      } catch (const std::exception&) {
        throw validation_error("bad dip spec '" + d + "'");
      }
    }
    const auto ds = fluxkit::synth_flux_scan(qubit, env, grid_from(a.grid), seqs,
                                             include_t1, dips, g.seed, a.scatter);
    std::vector<std::string> lines;
    for (const auto& r : ds.records) {
      std::ostringstream os;
      os << fluxkit::format_double(r.phi_ext) << ","
         << (r.is_t1 ? "t1" : r.seq.name()) << ","
         << fluxkit::format_double(r.time_constant_us) << ","
         << fluxkit::format_double(r.err_us);
      lines.push_back(os.str());
    }
    fluxkit::write_csv(a.out, provenance_lines(g),
                       "phi_ext_phi0,sequence,time_constant_us,err_us", lines);
    note_written(a.out, g);
  } else if (a.mode == "trace") {
    fluxkit::DecayModelSpec model;
    if (a.kind == "exp") {
      model.kind = fluxkit::DecayModelSpec::Kind::exponential;
    } else if (a.kind == "joint") {
      model.kind = fluxkit::DecayModelSpec::Kind::joint_pair;
    } else if (a.kind == "nonexp") {
      model.kind = fluxkit::DecayModelSpec::Kind::nonexponential;
    } else if (a.kind == "chi") {
      model.kind = fluxkit::DecayModelSpec::Kind::composite_chi;
      model.seq = parse_sequence(a.sequences);
      model.d_coeff = a.d_coeff;
      if (!a.noise_file.empty()) model.env = fluxkit::load_noise_file(a.noise_file);
    } else {
      throw validation_error("trace kind must be exp, joint, nonexp, or chi");
    }
    model.a = a.a;
    model.b = a.b;
    model.t1 = a.t1;
    model.a2 = a.a2;
    model.n = a.n;
    model.t1_tilde = a.t1_tilde;
    const auto traces =
        fluxkit::synth_decay_trace(model, grid_from(a.delays), a.shots, g.seed);
    if (traces.size() == 2 && a.out0.empty())
      throw validation_error("joint pair needs --out0 for the second trace");
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const std::string& path = k == 0 ? a.out : a.out0;
      std::vector<std::string> lines;
      for (std::size_t i = 0; i < traces[k].size(); ++i) {
        std::ostringstream os;
        os << fluxkit::format_double(traces[k].delays[i]) << ","
           << fluxkit::format_double(traces[k].p1[i]);
        if (!traces[k].shots.empty()) os << "," << traces[k].shots[i];
        lines.push_back(os.str());
      }
      fluxkit::write_csv(path, provenance_lines(g),
                         traces[k].shots.empty() ? "delay_us,p1"
                                                 : "delay_us,p1,shots",
                         lines);
      note_written(path, g);
    }
  } else {  // trajectory
    fluxkit::NoiseTrajectorySpec spec;
    spec.a_phi = a.a_phi;
    spec.duration = a.duration;
    spec.dt = a.dt;
    spec.seed = g.seed;
    const std::vector<double> traj = fluxkit::synth_1f_noise(spec);
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      lines.push_back(fluxkit::format_double(i * a.dt) + "," +
                      fluxkit::format_double(traj[i]));
    }
    fluxkit::write_csv(a.out, provenance_lines(g), "t_us,delta_phi_uphi0", lines);
    note_written(a.out, g);
  }
}

struct WaferArgs {
  std::string mode;  // stats | yield
  std::string map_file, targets_file, out;
  std::vector<std::string> exclude;
  double tolerance = 0.12;
  double short_threshold = 10.0;
};

std::map<fluxkit::GroupKey, double> load_targets_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open " + path);
  std::map<fluxkit::GroupKey, double> targets;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "kind,area_um2,rn_ohm")
        throw validation_error(path + ": expected header kind,area_um2,rn_ohm");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string kind, area, rn;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, area, ',') ||
        !std::getline(ss, rn))
      throw validation_error(path + " line " + std::to_string(line_no) +
                             ": expected 3 columns");
    if (kind != "jj" && kind != "jja")
      throw validation_error(path + " line " + std::to_string(line_no) +
                             ": kind must be jj or jja");
    try {
      targets[{kind == "jj" ? fluxkit::JunctionKind::jj
                            : fluxkit::JunctionKind::jja,
               std::stod(area)}] = std::stod(rn);
    } catch (const std::exception&) {
      throw validation_error(path + " line " + std::to_string(line_no) +
                             ": bad number");
    }
  }
  if (!header_seen) throw validation_error(path + ": empty targets file");
  return targets;
}

void run_wafer(const WaferArgs& a, const Global& g) {
  const fluxkit::WaferMap map =
      fluxkit::load_wafer_csv(a.map_file, a.short_threshold);
  if (a.mode == "stats") {
    const fluxkit::StatsSummary stats = fluxkit::rsd_by_area(map, a.exclude);
    std::vector<std::string> prov = provenance_lines(g);
    prov.push_back("wafer=" + map.wafer_label);
    for (const std::string& d : stats.excluded_dies) prov.push_back("excluded_die=" + d);
    prov.push_back("n_excluded_records=" + std::to_string(stats.n_excluded_records));
    for (const std::string& n : stats.notices) prov.push_back("notice=" + n);
    std::vector<std::string> lines;
    for (const auto& [key, gs] : stats.groups) {
      std::ostringstream os;
      os << (key.kind == fluxkit::JunctionKind::jj ? "jj" : "jja") << ","
         << fluxkit::format_double(key.area_um2) << "," << gs.count << ","
         << fluxkit::format_double(gs.mean_ohm) << ","
         << fluxkit::format_double(gs.std_ohm) << ","
         << fluxkit::format_double(gs.rsd_percent);
      lines.push_back(os.str());
    }
    fluxkit::write_csv(a.out, prov,
                       "kind,area_um2,count,mean_ohm,std_ohm,rsd_percent", lines);
    note_written(a.out, g);
  } else {  // yield
    const auto targets = load_targets_csv(a.targets_file);
    const fluxkit::YieldReport rep =
        fluxkit::yield_report(map, targets, a.tolerance);
    std::vector<std::string> prov = provenance_lines(g);
    prov.push_back("wafer=" + map.wafer_label);
    for (const auto& f : rep.failures)
      prov.push_back("failure=" + f.die_id + ": " + f.reason);
    std::vector<std::string> lines = {
        fluxkit::format_double(rep.yield_percent) + "," +
        std::to_string(rep.n_total) + "," + std::to_string(rep.n_pass) + "," +
        std::to_string(rep.failures.size())};
    fluxkit::write_csv(a.out, prov, "yield_percent,n_total,n_pass,n_fail", lines);
    note_written(a.out, g);
  }
}

struct ZetaArgs {
  std::string mode;  // table | band
  std::string qubits_file, out;
  std::vector<double> band;  // fmin fmax n
  double tan_lo = 2.0e-6, tan_hi = 3.5e-6, a_phi = 0.0, temp_mk = 0.0;
};

void run_zeta(const ZetaArgs& a, const Global& g) {
  if (a.mode == "table") {
    const auto qubits = fluxkit::load_zeta_qubits_csv(a.qubits_file);
    const auto rows = fluxkit::zeta_table(qubits);
    std::vector<std::string> lines;
    for (const auto& r : rows) {
      lines.push_back(r.label + "," + fluxkit::format_double(r.f01) + "," +
                      fluxkit::format_double(r.zeta));
    }
    fluxkit::write_csv(a.out, provenance_lines(g), "label,f01_ghz,zeta_us_per_ghz",
                       lines);
    note_written(a.out, g);
  } else {  // band
    const auto rows =
        fluxkit::model_band(grid_from(a.band), {a.tan_lo, a.tan_hi}, a.a_phi,
                            1e-3 * a.temp_mk);
    std::vector<std::string> lines;
    for (const auto& r : rows) {
      lines.push_back(fluxkit::format_double(r.f01) + "," +
                      fluxkit::format_double(r.zeta_lo) + "," +
                      fluxkit::format_double(r.zeta_hi) + "," +
                      fluxkit::format_double(r.zeta_flux));
    }
    fluxkit::write_csv(a.out, provenance_lines(g),
                       "f01_ghz,zeta_lo,zeta_hi,zeta_flux", lines);
    note_written(a.out, g);
  }
}

}  // namespace

int main(int argc, char** argv) {
  Global g;
  {
    // Canonical invocation string for the provenance hash.
    std::ostringstream os;
    for (int i = 1; i < argc; ++i) os << (i > 1 ? " " : "") << argv[i];
    g.config_line = os.str();
  }

  CLI::App app{"fluxonium spectra, decoherence models, and wafer statistics"};
  app.set_config("--config");
  app.require_subcommand(1);
  // Let --seed/--quiet appear after the subcommand as well.
  app.fallthrough();
  app.add_option("--seed", g.seed, "RNG seed for synthesis subcommands")
      ->capture_default_str();
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  SpectrumArgs spec_args;
  CLI::App* spectrum = app.add_subcommand("spectrum", "transition spectra and matrix elements");
  spectrum->add_option("--qubit", spec_args.qubit_file, "qubit parameter file")->required();
  CLI::Option* opt_phi =
      spectrum->add_option("--phi", spec_args.phi, "external flux, Phi0");
  spectrum->add_option("--sweep", spec_args.sweep, "flux sweep: lo hi n")
      ->expected(3)
      ->excludes(opt_phi);
  spectrum->add_option("--levels", spec_args.levels, "levels to retain")
      ->capture_default_str();
  spectrum->add_option("--out", spec_args.out, "output CSV")->required();

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "decay and dephasing curve fits");
  fit->add_option("mode", fit_args.mode, "exp | joint | nonexp | dephasing")
      ->required()
      ->check(CLI::IsMember({"exp", "joint", "nonexp", "dephasing"}));
  fit->add_option("--trace", fit_args.trace_file, "trace CSV (|1>-initialized for joint)");
  fit->add_option("--trace0", fit_args.trace0_file, "|0>-initialized trace CSV (joint)");
  fit->add_option("--triple", fit_args.triple_file, "three-phase dephasing CSV");
  fit->add_option("--f01", fit_args.f01, "qubit frequency, GHz (joint: adds temp_mk)");
  fit->add_option("--fix-b", fit_args.fix_b, "pin the joint offset");
  fit->add_option("--t1", fit_args.t1_ref, "T1 reference for the dephasing model, us");
  fit->add_option("--sequence", fit_args.sequence, "ramsey | cpmg<N>")
      ->capture_default_str();
  fit->add_flag("--white", fit_args.white, "include the white dephasing term");
  fit->add_flag("--pure", fit_args.pure, "plain exponential T2 model");
  fit->add_option("--out", fit_args.out, "output JSON")->required();

  ExtractArgs ex_args;
  CLI::App* extract = app.add_subcommand("extract", "noise parameter extraction from scans");
  extract->add_option("mode", ex_args.mode, "tandelta | fluxnoise")
      ->required()
      ->check(CLI::IsMember({"tandelta", "fluxnoise"}));
  extract->add_option("--scan", ex_args.scan_files, "flux scan CSV (repeatable)")
      ->required();
  extract->add_option("--qubit", ex_args.qubit_file, "qubit parameter file")->required();
  extract->add_option("--temp-mk", ex_args.temp_mk, "device temperature, mK");
  extract->add_option("--variant", ex_args.variant, "primary variant: finite | t0")
      ->capture_default_str();
  extract->add_option("--asymmetry", ex_args.asymmetry,
                      "data-above-model penalty ratio")
      ->capture_default_str();
  extract->add_flag("--robust", ex_args.robust, "clip the worst negative outliers");
  extract->add_option("--out", ex_args.out, "output JSON")->required();

  SynthArgs sy_args;
  CLI::App* synth = app.add_subcommand("synth", "synthetic datasets with pinned seeds");
  synth->add_option("mode", sy_args.mode, "scan | trace | trajectory")
      ->required()
      ->check(CLI::IsMember({"scan", "trace", "trajectory"}));
  synth->add_option("--qubit", sy_args.qubit_file, "qubit parameter file");
  synth->add_option("--noise", sy_args.noise_file, "noise environment file");
  synth->add_option("--grid", sy_args.grid, "flux grid: lo hi n")->expected(3);
  synth->add_option("--delays", sy_args.delays, "delay grid: lo hi n, us")->expected(3);
  synth->add_option("--sequences", sy_args.sequences,
                    "comma list: t1,ramsey,cpmg<N> (scan) or one sequence (chi trace)")
      ->capture_default_str();
  synth->add_option("--dip", sy_args.dips, "TLS dip phi:suppression (repeatable)");
  synth->add_option("--scatter", sy_args.scatter, "lognormal scatter sigma")
      ->capture_default_str();
  synth->add_option("--kind", sy_args.kind, "trace model: exp | joint | nonexp | chi")
      ->capture_default_str();
  synth->add_option("--a", sy_args.a, "amplitude")->capture_default_str();
  synth->add_option("--b", sy_args.b, "offset")->capture_default_str();
  synth->add_option("--t1", sy_args.t1, "decay time, us")->capture_default_str();
  synth->add_option("--a2", sy_args.a2, "joint second amplitude");
  synth->add_option("--n", sy_args.n, "non-exponential weight");
  synth->add_option("--t1-tilde", sy_args.t1_tilde, "non-exponential time, us");
  synth->add_option("--d-coeff", sy_args.d_coeff, "dispersion, rad*GHz/Phi0 (chi)");
  synth->add_option("--shots", sy_args.shots, "binomial shots (0 = noiseless)")
      ->capture_default_str();
  synth->add_option("--aphi", sy_args.a_phi, "1/f amplitude, uPhi0/sqrt(Hz)");
  synth->add_option("--duration", sy_args.duration, "trajectory length, us");
  synth->add_option("--dt", sy_args.dt, "trajectory step, us");
  synth->add_option("--out", sy_args.out, "output CSV")->required();
  synth->add_option("--out0", sy_args.out0, "second output CSV (joint pair)");

  WaferArgs wf_args;
  CLI::App* wafer = app.add_subcommand("wafer", "wafer resistance maps");
  wafer->add_option("mode", wf_args.mode, "stats | yield")
      ->required()
      ->check(CLI::IsMember({"stats", "yield"}));
  wafer->add_option("--map", wf_args.map_file, "wafer CSV")->required();
  wafer->add_option("--targets", wf_args.targets_file, "per-group rn targets CSV");
  wafer->add_option("--exclude", wf_args.exclude, "die to exclude (repeatable)");
  wafer->add_option("--tolerance", wf_args.tolerance, "fractional rn tolerance")
      ->capture_default_str();
  wafer->add_option("--short-threshold", wf_args.short_threshold,
                    "short flag threshold, Ohm")
      ->capture_default_str();
  wafer->add_option("--out", wf_args.out, "output CSV")->required();

  ZetaArgs z_args;
  CLI::App* zeta = app.add_subcommand("zeta", "T1 quality factor normalization");
  zeta->add_option("mode", z_args.mode, "table | band")
      ->required()
      ->check(CLI::IsMember({"table", "band"}));
  zeta->add_option("--qubits", z_args.qubits_file, "label,e_c,e_j,e_l,t1 CSV");
  zeta->add_option("--band", z_args.band, "frequency grid: fmin fmax n, GHz")
      ->expected(3);
  zeta->add_option("--tan-lo", z_args.tan_lo, "lower tan_delta")->capture_default_str();
  zeta->add_option("--tan-hi", z_args.tan_hi, "upper tan_delta")->capture_default_str();
  zeta->add_option("--aphi", z_args.a_phi, "1/f flux amplitude, uPhi0/sqrt(Hz)");
  zeta->add_option("--temp-mk", z_args.temp_mk, "temperature, mK");
  zeta->add_option("--out", z_args.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (spectrum->parsed()) {
      run_spectrum(spec_args, g);
    } else if (fit->parsed()) {
      fit_args.have_f01 = fit->count("--f01") > 0;
      fit_args.have_fix_b = fit->count("--fix-b") > 0;
      if (fit_args.mode == "joint" &&
          (fit_args.trace_file.empty() || fit_args.trace0_file.empty()))
        throw validation_error("fit joint requires --trace and --trace0");
      if (fit_args.mode != "joint" && fit_args.mode != "dephasing" &&
          fit_args.trace_file.empty())
        throw validation_error("fit " + fit_args.mode + " requires --trace");
      if (fit_args.mode == "dephasing" && fit_args.trace_file.empty() &&
          fit_args.triple_file.empty())
        throw validation_error("fit dephasing requires --trace or --triple");
      run_fit(fit_args, g);
    } else if (extract->parsed()) {
      run_extract(ex_args, g);
    } else if (synth->parsed()) {
      if (sy_args.mode == "scan" &&
          (sy_args.qubit_file.empty() || sy_args.noise_file.empty() ||
           sy_args.grid.empty()))
        throw validation_error("synth scan requires --qubit, --noise, --grid");
      if (sy_args.mode == "trace" && sy_args.delays.empty())
        throw validation_error("synth trace requires --delays");
      if (sy_args.mode == "trajectory" &&
          (!(sy_args.duration > 0.0) || !(sy_args.dt > 0.0)))
        throw validation_error("synth trajectory requires --duration and --dt");
      run_synth(sy_args, g);
    } else if (wafer->parsed()) {
      if (wf_args.mode == "yield" && wf_args.targets_file.empty())
        throw validation_error("wafer yield requires --targets");
      run_wafer(wf_args, g);
    } else if (zeta->parsed()) {
      if (z_args.mode == "table" && z_args.qubits_file.empty())
        throw validation_error("zeta table requires --qubits");
      if (z_args.mode == "band" && z_args.band.empty())
        throw validation_error("zeta band requires --band");
      run_zeta(z_args, g);
    }
  } catch (const fluxkit::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fluxkit::solver_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const fluxkit::fit_error& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
