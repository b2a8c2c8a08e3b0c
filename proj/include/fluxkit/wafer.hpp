// wafer.hpp: junction-resistance wafer maps: uniformity and yield statistics
#pragma once

#include <map>
#include <string>
#include <vector>

namespace fluxkit {

enum class JunctionKind { jj, jja };

struct WaferRecord {
  std::string die_id;
  double x_mm = 0.0;
  double y_mm = 0.0;
  JunctionKind kind = JunctionKind::jj;
  double area_um2 = 0.0;     // per junction
  int n_junctions = 1;       // 1 for JJ, series count for JJA
  double rn_ohm = 0.0;       // total measured resistance; +inf when open
  bool open_flag = false;
  bool short_flag = false;
};

struct WaferMap {
  std::string wafer_label;
  std::vector<WaferRecord> records;

  // Copy with all records from the listed dies removed (edge-die exclusion).
  WaferMap excluding(const std::vector<std::string>& die_ids) const;
};

// Parses the CSV schema die_id,x_mm,y_mm,kind,area_um2,n_junctions,rn_ohm.
// rn_ohm accepts a number or "open"; values <= short_threshold_ohm are kept
// and flagged short. Malformed rows raise validation_error with line numbers.
WaferMap load_wafer_csv(const std::string& path, double short_threshold_ohm = 10.0);

struct GroupKey {
  JunctionKind kind;
  double area_um2;
  bool operator<(const GroupKey& o) const {
    if (kind != o.kind) return kind < o.kind;
    return area_um2 < o.area_um2;
  }
};

struct GroupStats {
  double mean_ohm = 0.0;
  double std_ohm = 0.0;      // sample (n-1) standard deviation
  double rsd_percent = 0.0;  // 100 * std / mean
  int count = 0;
};

struct StatsSummary {
  std::map<GroupKey, GroupStats> groups;
  std::vector<std::string> excluded_dies;   // applied exclusion list
  int n_excluded_records = 0;               // edge-die + open/short removals
  std::vector<std::string> notices;         // e.g. groups omitted as too small
};

// Per-(kind, area) sample statistics after removing open/short records and the
// listed edge dies; groups with fewer than 3 remaining records are omitted
// with a notice. Exclusions are logged, never silent.
StatsSummary rsd_by_area(const WaferMap& map,
                         const std::vector<std::string>& exclude_dies = {});

struct YieldFailure {
  std::size_t record_index = 0;
  std::string die_id;
  std::string reason;
};

struct YieldReport {
  double yield_percent = 0.0;
  int n_total = 0;
  int n_pass = 0;
  std::vector<YieldFailure> failures;
};

// A record passes when it is neither open nor short and its rn lies within
// tolerance (fractional) of the per-(kind, area) target. Missing targets for a
// present group raise validation_error.
YieldReport yield_report(const WaferMap& map, const std::map<GroupKey, double>& expected_rn,
                         double tolerance);

// Ambegaokar-Baratoff: E_J/h = (Delta/h) * R_K / (8 rn). GHz from Ohms.
double rn_to_ej(double rn_ohm, double delta_gap_ghz);
double ej_to_rn(double ej_ghz, double delta_gap_ghz);

}  // namespace fluxkit
