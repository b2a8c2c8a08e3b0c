// qubit_model.hpp: fluxonium Hamiltonian, spectra, matrix elements, flux dispersion
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace fluxkit {

// ---- domain types ----

struct FluxoniumParams {
  std::string label;   // device name, e.g. "G"
  double e_c = 0.0;    // charging energy E_C/h, GHz
  double e_j = 0.0;    // Josephson energy E_J/h, GHz
  double e_l = 0.0;    // inductive energy E_L/h, GHz

  void validate() const;                        // throws validation_error
  std::vector<std::string> warnings() const;    // e.g. e_j/e_c outside [0.5, 20]
  double phi_zp() const;                        // (2 e_c / e_l)^(1/4)
  double f_osc() const;                         // sqrt(8 e_c e_l), GHz
};

struct FluxBias {
  double phi_ext = 0.5;  // external flux in units of Phi0; model periodic with period 1

  void validate() const;  // finite
};

// Lowest eigenpairs of
//   H/h = 4 e_c n^2 - e_j cos(phi) + (e_l/2) (phi + 2 pi phi_ext)^2
// solved in the harmonic oscillator basis of the linear part. Internally the
// displaced coordinate chi = phi + 2 pi phi_ext is used, which makes the basis
// flux independent; phi_ext is reduced mod 1 first, so Phi0-periodicity is
// exact by construction.
struct EigenSolution {
  FluxoniumParams params;
  double phi_ext = 0.5;       // reduced to [0, 1)
  int basis_size = 0;
  Eigen::VectorXd energies;   // ascending, GHz; size = retained levels
  Eigen::MatrixXd eigenvectors;  // basis_size x retained levels, orthonormal columns
  double phi_zp = 0.0;

  int n_levels() const { return static_cast<int>(energies.size()); }
  double transition(int i, int j) const;  // energies[j] - energies[i], GHz
  double f01() const { return transition(0, 1); }
};

struct MatrixElements {
  std::complex<double> phi_01;           // <i|phi|j>
  std::complex<double> sin_half_phi_01;  // <i|sin(phi/2)|j>
  double abs_phi_01 = 0.0;
  double abs_sin_half_phi_01 = 0.0;
};

// ---- operations ----

// Fixed-basis solve. Throws solver_error when the eigensolver fails or when the
// retained eigenvectors carry visible weight in the top 5% of the basis
// (truncation check), and validation_error on bad arguments
// (requires basis_size >= 4*n_levels; at least 4 levels are always retained).
EigenSolution solve_spectrum(const FluxoniumParams& params, const FluxBias& flux,
                             int basis_size, int n_levels);

// Doubles the basis starting at start_basis until all retained transition
// frequencies move by less than rel_tol between doublings; returns the finer
// solution tagged with its basis size. Throws solver_error past the cap.
EigenSolution converged_spectrum(const FluxoniumParams& params, const FluxBias& flux,
                                 int n_levels, double rel_tol,
                                 int start_basis = 60, int basis_cap = 2000);

// <i|phi|j> and <i|sin(phi/2)|j> in the eigenbasis of sol. Magnitudes are
// independent of eigenvector sign/phase conventions.
MatrixElements matrix_elements(const EigenSolution& sol, int i, int j);

// D = d(omega_01)/d(Phi_ext) in rad*GHz per Phi0, central differences with
// step 1e-5 Phi0 plus one Richardson refinement; the refinement is checked for
// 1e-4 relative stability against the unrefined stencil.
double flux_dispersion(const FluxoniumParams& params, const FluxBias& flux);

struct SweepRow {
  double phi_ext = 0.0;
  std::vector<double> transitions;  // f_0k for k = 1..n_levels-1, GHz
  double abs_phi_01 = 0.0;
  double abs_sin_half_phi_01 = 0.0;
  double dispersion = 0.0;          // rad*GHz per Phi0
  int basis_size = 0;
};

// One converged record per grid point, ordered as the input grid. Solver
// errors are rethrown with the row index and flux attached.
std::vector<SweepRow> spectrum_sweep(const FluxoniumParams& params,
                                     const std::vector<FluxBias>& grid, int n_levels);

}  // namespace fluxkit
