// wafer.cpp: junction wafer-map statistics
#include "fluxkit/wafer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fluxkit/constants.hpp"
#include "fluxkit/errors.hpp"

namespace fluxkit {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
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

}  // namespace

WaferMap WaferMap::excluding(const std::vector<std::string>& die_ids) const {
  const std::set<std::string> drop(die_ids.begin(), die_ids.end());
  WaferMap out;
  out.wafer_label = wafer_label;
  for (const auto& r : records)
    if (drop.find(r.die_id) == drop.end()) out.records.push_back(r);
  return out;
}

WaferMap load_wafer_csv(const std::string& path, double short_threshold_ohm) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open wafer file: " + path);

  WaferMap map;
  map.wafer_label = std::filesystem::path(path).stem().string();

  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_row(line);
    if (!header_seen) {
      const std::vector<std::string> expect = {"die_id", "x_mm",        "y_mm",
                                               "kind",   "area_um2",    "n_junctions",
                                               "rn_ohm"};
      if (fields != expect)
        throw validation_error("line " + std::to_string(line_no) +
                               ": unexpected wafer CSV header");
      header_seen = true;
      continue;
    }
    if (fields.size() != 7)
      throw validation_error("line " + std::to_string(line_no) +
                             ": expected 7 fields, got " +
                             std::to_string(fields.size()));
    WaferRecord r;
    r.die_id = fields[0];
    r.x_mm = parse_num(fields[1], "x_mm", line_no);
    r.y_mm = parse_num(fields[2], "y_mm", line_no);
    if (fields[3] == "jj") {
      r.kind = JunctionKind::jj;
    } else if (fields[3] == "jja") {
      r.kind = JunctionKind::jja;
    } else {
      throw validation_error("line " + std::to_string(line_no) +
                             ": kind must be jj or jja, got '" + fields[3] + "'");
    }
    r.area_um2 = parse_num(fields[4], "area_um2", line_no);
    if (!(r.area_um2 > 0.0))
      throw validation_error("line " + std::to_string(line_no) +
                             ": area_um2 must be positive");
    r.n_junctions = static_cast<int>(parse_num(fields[5], "n_junctions", line_no));
    if (r.n_junctions < 1)
      throw validation_error("line " + std::to_string(line_no) +
                             ": n_junctions must be >= 1");
    if (fields[6] == "open") {
      r.rn_ohm = std::numeric_limits<double>::infinity();
      r.open_flag = true;
    } else {
      r.rn_ohm = parse_num(fields[6], "rn_ohm", line_no);
      if (!(r.rn_ohm > 0.0))
        throw validation_error("line " + std::to_string(line_no) +
                               ": rn_ohm must be positive");
      if (r.rn_ohm <= short_threshold_ohm) r.short_flag = true;
    }
    map.records.push_back(std::move(r));
  }
  if (!header_seen) throw validation_error("wafer file has no header: " + path);
  return map;
}

StatsSummary rsd_by_area(const WaferMap& map,
                         const std::vector<std::string>& exclude_dies) {
  StatsSummary out;
  out.excluded_dies = exclude_dies;
  const std::set<std::string> drop(exclude_dies.begin(), exclude_dies.end());

  std::map<GroupKey, std::vector<double>> samples;
  for (const auto& r : map.records) {
    if (drop.count(r.die_id) != 0 || r.open_flag || r.short_flag) {
      ++out.n_excluded_records;
      continue;
    }
    samples[{r.kind, r.area_um2}].push_back(r.rn_ohm);
  }

  for (const auto& [key, vals] : samples) {
    if (vals.size() < 3) {
      std::ostringstream os;
      os << "group (" << (key.kind == JunctionKind::jj ? "jj" : "jja") << ", "
         << key.area_um2 << " um2) omitted: only " << vals.size() << " records";
      out.notices.push_back(os.str());
      continue;
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    GroupStats g;
    g.mean_ohm = mean;
    g.std_ohm = std::sqrt(ss / (vals.size() - 1));
    g.rsd_percent = mean != 0.0 ? 100.0 * g.std_ohm / mean : 0.0;
    g.count = static_cast<int>(vals.size());
    out.groups[key] = g;
  }
  return out;
}

YieldReport yield_report(const WaferMap& map,
                         const std::map<GroupKey, double>& expected_rn,
                         double tolerance) {
  if (!(tolerance > 0.0)) throw validation_error("yield tolerance must be positive");
  YieldReport rep;
  rep.n_total = static_cast<int>(map.records.size());
  for (std::size_t i = 0; i < map.records.size(); ++i) {
    const WaferRecord& r = map.records[i];
    std::string reason;
    if (r.open_flag) {
      reason = "open";
    } else if (r.short_flag) {
      reason = "short";
    } else {
      const auto it = expected_rn.find({r.kind, r.area_um2});
      if (it == expected_rn.end()) {
        std::ostringstream os;
        os << "no expected rn for group ("
           << (r.kind == JunctionKind::jj ? "jj" : "jja") << ", " << r.area_um2
           << " um2)";
        throw validation_error(os.str());
      }
      const double dev = std::abs(r.rn_ohm - it->second) / it->second;
      if (dev > tolerance) {
        std::ostringstream os;
        os << "rn deviates " << 100.0 * dev << "% from target";
        reason = os.str();
      }
    }
    if (reason.empty()) {
      ++rep.n_pass;
    } else {
      rep.failures.push_back({i, r.die_id, reason});
    }
  }
  rep.yield_percent =
      rep.n_total > 0 ? 100.0 * rep.n_pass / rep.n_total : 0.0;
  return rep;
}

double rn_to_ej(double rn_ohm, double delta_gap_ghz) {
  if (!(rn_ohm > 0.0)) throw validation_error("rn must be positive");
  if (!(delta_gap_ghz > 0.0)) throw validation_error("delta_gap must be positive");
  return delta_gap_ghz * r_klitzing_ohm / (8.0 * rn_ohm);
}

double ej_to_rn(double ej_ghz, double delta_gap_ghz) {
  if (!(ej_ghz > 0.0)) throw validation_error("e_j must be positive");
  if (!(delta_gap_ghz > 0.0)) throw validation_error("delta_gap must be positive");
  return delta_gap_ghz * r_klitzing_ohm / (8.0 * ej_ghz);
}

}  // namespace fluxkit
