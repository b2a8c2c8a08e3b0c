// io.cpp: parameter files, CSV ingestion, atomic output
#include "fluxkit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fluxkit/errors.hpp"

namespace fluxkit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_num(const std::string& s, const std::string& what, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream os;
    os << "line " << line_no << ": cannot parse " << what << " from '" << s << "'";
    throw validation_error(os.str());
  }
}

int parse_int(const std::string& s, const std::string& what, int line_no) {
  const double v = parse_num(s, what, line_no);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw validation_error("line " + std::to_string(line_no) + ": " + what +
                           " must be an integer");
  return i;
}

double require_num(const std::map<std::string, std::string>& kv,
                   const std::string& key, const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw validation_error("missing field '" + key + "' in " + path);
  return parse_num(it->second, key, 0);
}

bool optional_num(const std::map<std::string, std::string>& kv,
                  const std::string& key, double& out) {
  const auto it = kv.find(key);
  if (it == kv.end()) return false;
  out = parse_num(it->second, key, 0);
  return true;
}

// Shared CSV walker: yields (line_no, fields) for data rows after checking the
// header row against the expected schema.
template <typename RowFn>
void for_each_csv_row(const std::string& path,
                      const std::vector<std::string>& expect_header,
                      bool allow_optional_last, RowFn fn) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  const std::size_t min_cols =
      allow_optional_last ? expect_header.size() - 1 : expect_header.size();
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_row(t);
    if (!header_seen) {
      const bool full_match =
          fields == expect_header;
      const bool short_match =
          allow_optional_last &&
          std::equal(fields.begin(), fields.end(), expect_header.begin(),
                     expect_header.begin() + min_cols) &&
          fields.size() == min_cols;
      if (!full_match && !short_match)
        throw validation_error("line " + std::to_string(line_no) +
                               ": unexpected CSV header in " + path);
      header_seen = true;
      continue;
    }
    if (fields.size() != expect_header.size() && fields.size() != min_cols)
      throw validation_error("line " + std::to_string(line_no) +
                             ": wrong field count in " + path);
    fn(line_no, fields);
  }
  if (!header_seen) throw validation_error("file has no header: " + path);
}

}  // namespace

// ---- key = value files ----

std::map<std::string, std::string> read_key_value(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw validation_error("line " + std::to_string(line_no) +
                             ": expected key = value in " + path);
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw validation_error("line " + std::to_string(line_no) + ": empty key in " +
                             path);
    kv[key] = val;
  }
  return kv;
}

FluxoniumParams load_qubit_file(const std::string& path) {
  const auto kv = read_key_value(path);
  FluxoniumParams p;
  const auto label = kv.find("label");
  if (label == kv.end())
    throw validation_error("missing field 'label' in " + path);
  p.label = label->second;
  p.e_c = require_num(kv, "e_c_ghz", path);
  p.e_j = require_num(kv, "e_j_ghz", path);
  p.e_l = require_num(kv, "e_l_ghz", path);
  p.validate();
  return p;
}

NoiseEnvironment load_noise_file(const std::string& path) {
  const auto kv = read_key_value(path);
  NoiseEnvironment env;
  double v = 0.0;
  if (optional_num(kv, "tan_delta_c", v)) env.tan_delta_c = v;
  if (optional_num(kv, "temp_mk", v)) env.temp = 1e-3 * v;
  if (optional_num(kv, "epsilon", v)) env.loss_exponent = v;
  if (optional_num(kv, "a_phi_uphi0", v)) env.a_phi = v;
  if (optional_num(kv, "a_white", v)) env.a_white = v;
  if (optional_num(kv, "x_qp", v)) env.x_qp = v;
  if (optional_num(kv, "delta_gap_ghz", v)) env.delta_gap = v;
  env.validate();
  return env;
}

CavityParams load_cavity_file(const std::string& path) {
  const auto kv = read_key_value(path);
  CavityParams cav;
  cav.kappa = require_num(kv, "kappa_mhz", path);
  cav.chi = require_num(kv, "chi_mhz", path);
  cav.f_cavity = require_num(kv, "f_cavity_ghz", path);
  double v = 0.0;
  if (optional_num(kv, "n_bar", v)) cav.n_bar = v;
  cav.validate();
  return cav;
}

// ---- CSV ingestion ----

DecayTrace load_trace_csv(const std::string& path, InitLabel init) {
  std::vector<double> delays, p1;
  std::vector<int> shots;
  for_each_csv_row(path, {"delay_us", "p1", "shots"}, true,
                   [&](int line_no, const std::vector<std::string>& f) {
                     delays.push_back(parse_num(f[0], "delay_us", line_no));
                     p1.push_back(parse_num(f[1], "p1", line_no));
                     if (f.size() == 3)
                       shots.push_back(parse_int(f[2], "shots", line_no));
                   });
  if (!shots.empty() && shots.size() != delays.size())
    throw validation_error("shots column must be present on every row: " + path);
  return DecayTrace::from_measurement(std::move(delays), std::move(p1),
                                      std::move(shots), init);
}

DephasingTriple load_triple_csv(const std::string& path) {
  struct Cols {
    std::vector<double> delays, p1;
    std::vector<int> shots;
  };
  std::map<int, Cols> by_phase;
  for_each_csv_row(path, {"delay_us", "phase_deg", "p1", "shots"}, true,
                   [&](int line_no, const std::vector<std::string>& f) {
                     const int phase = parse_int(f[1], "phase_deg", line_no);
                     if (phase != 0 && phase != 60 && phase != 120)
                       throw validation_error(
                           "line " + std::to_string(line_no) +
                           ": phase_deg must be one of 0, 60, 120");
                     Cols& c = by_phase[phase];
                     c.delays.push_back(parse_num(f[0], "delay_us", line_no));
                     c.p1.push_back(parse_num(f[2], "p1", line_no));
                     if (f.size() == 4)
                       c.shots.push_back(parse_int(f[3], "shots", line_no));
                   });
  for (int phase : {0, 60, 120})
    if (by_phase.find(phase) == by_phase.end())
      throw validation_error("triple file missing phase " + std::to_string(phase) +
                             ": " + path);
  DephasingTriple triple;
  auto build = [](Cols& c) {
    return DecayTrace::from_measurement(std::move(c.delays), std::move(c.p1),
                                        std::move(c.shots), InitLabel::none);
  };
  triple.phase_0 = build(by_phase[0]);
  triple.phase_60 = build(by_phase[60]);
  triple.phase_120 = build(by_phase[120]);
  triple.validate();
  return triple;
}

FluxScanDataset load_scan_csv(const std::string& path, const FluxoniumParams& qubit) {
  FluxScanDataset ds;
  ds.qubit = qubit;
  for_each_csv_row(
      path, {"phi_ext_phi0", "sequence", "time_constant_us", "err_us"}, false,
      [&](int line_no, const std::vector<std::string>& f) {
        ScanRecord r;
        r.phi_ext = parse_num(f[0], "phi_ext_phi0", line_no);
        const std::string& seq = f[1];
        if (seq == "t1") {
          r.is_t1 = true;
        } else if (seq == "ramsey") {
          r.seq = SequenceType::ramsey();
        } else if (seq.rfind("cpmg", 0) == 0) {
          r.seq = SequenceType::cpmg(parse_int(seq.substr(4), "cpmg count", line_no));
        } else {
          throw validation_error("line " + std::to_string(line_no) +
                                 ": unknown sequence '" + seq + "'");
        }
        r.time_constant_us = parse_num(f[2], "time_constant_us", line_no);
        r.err_us = parse_num(f[3], "err_us", line_no);
        ds.records.push_back(r);
      });
  ds.validate();
  return ds;
}

std::vector<std::pair<FluxoniumParams, double>> load_zeta_qubits_csv(
    const std::string& path) {
  std::vector<std::pair<FluxoniumParams, double>> out;
  for_each_csv_row(path, {"label", "e_c_ghz", "e_j_ghz", "e_l_ghz", "t1_us"}, false,
                   [&](int line_no, const std::vector<std::string>& f) {
                     FluxoniumParams p;
                     p.label = f[0];
                     p.e_c = parse_num(f[1], "e_c_ghz", line_no);
                     p.e_j = parse_num(f[2], "e_j_ghz", line_no);
                     p.e_l = parse_num(f[3], "e_l_ghz", line_no);
                     p.validate();
                     out.emplace_back(p, parse_num(f[4], "t1_us", line_no));
                   });
  return out;
}

// ---- output ----

std::uint64_t config_hash(const std::string& canonical) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_string(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec)
      throw validation_error("cannot create directory " +
                             target.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw validation_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw validation_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw validation_error("cannot rename into place: " + path + ": " + ec.message());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& provenance,
               const std::string& header, const std::vector<std::string>& rows) {
  std::ostringstream os;
  for (const auto& p : provenance) os << "# " << p << "\n";
  os << header << "\n";
  for (const auto& r : rows) os << r << "\n";
  atomic_write(path, os.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace fluxkit
