// io.hpp: parameter files, CSV schemas, atomic writes, config hashing
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fluxkit/noise_extract.hpp"
#include "fluxkit/noise_models.hpp"
#include "fluxkit/qubit_model.hpp"
#include "fluxkit/trace_fit.hpp"

namespace fluxkit {

// ---- structured text (key = value) parameter files ----

std::map<std::string, std::string> read_key_value(const std::string& path);

// Fields: label, e_c_ghz, e_j_ghz, e_l_ghz. Missing fields raise
// validation_error naming the field.
FluxoniumParams load_qubit_file(const std::string& path);

// Fields: tan_delta_c, temp_mk, epsilon, a_phi_uphi0, a_white, x_qp,
// delta_gap_ghz; absent fields keep their defaults (delta_gap 44 GHz).
NoiseEnvironment load_noise_file(const std::string& path);

// Fields: kappa_mhz, chi_mhz, f_cavity_ghz (required).
CavityParams load_cavity_file(const std::string& path);

// ---- CSV schemas ----

// delay_us,p1[,shots]; '#' lines ignored; errors carry line numbers.
DecayTrace load_trace_csv(const std::string& path, InitLabel init = InitLabel::none);

// Single file with a phase column in {0, 60, 120} degrees.
DephasingTriple load_triple_csv(const std::string& path);

// phi_ext_phi0,sequence,time_constant_us,err_us with sequence in
// t1|ramsey|cpmg<N>.
FluxScanDataset load_scan_csv(const std::string& path, const FluxoniumParams& qubit);

// label,e_c_ghz,e_j_ghz,e_l_ghz,t1_us rows for the zeta table.
std::vector<std::pair<FluxoniumParams, double>> load_zeta_qubits_csv(
    const std::string& path);

// ---- output ----

// FNV-1a 64-bit over the canonical flag string; stable across runs.
std::uint64_t config_hash(const std::string& canonical);
std::string hash_string(std::uint64_t h);  // "0x" + 16 hex digits

// Write-to-temp-then-rename; creates parent directories.
void atomic_write(const std::string& path, const std::string& content);

// CSV with "# key=value" provenance comment lines before the header.
void write_csv(const std::string& path, const std::vector<std::string>& provenance,
               const std::string& header, const std::vector<std::string>& rows);

std::string format_double(double v);  // shortest round-trip representation

}  // namespace fluxkit
