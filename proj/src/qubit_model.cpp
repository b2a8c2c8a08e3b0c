// qubit_model.cpp: oscillator-basis fluxonium solver
#include "fluxkit/qubit_model.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "fluxkit/errors.hpp"

namespace fluxkit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Reduce external flux to [0, 1); the Hamiltonian is Phi0-periodic and the
// reduced value keeps the cosine well within one basis displacement.
double reduce_flux(double phi_ext) {
  if (!std::isfinite(phi_ext)) throw validation_error("phi_ext must be finite");
  double r = phi_ext - std::floor(phi_ext);
  if (r >= 1.0) r = 0.0;  // guard against floor rounding at the boundary
  return r;
}

// Eigendecomposition of the displaced-phase operator chi = phi_zp (a + a^dag),
// used to evaluate operator functions f(chi) = V f(lambda) V^T.
struct ChiEigen {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd v;
};

ChiEigen chi_eigen(int basis_size, double phi_zp) {
  Eigen::MatrixXd chi = Eigen::MatrixXd::Zero(basis_size, basis_size);
  for (int m = 0; m + 1 < basis_size; ++m) {
    const double off = phi_zp * std::sqrt(static_cast<double>(m + 1));
    chi(m, m + 1) = off;
    chi(m + 1, m) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(chi);
  if (es.info() != Eigen::Success)
    throw solver_error("chi operator eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

void FluxoniumParams::validate() const {
  if (!(e_c > 0.0) || !std::isfinite(e_c))
    throw validation_error("e_c must be positive (got " + std::to_string(e_c) + ")");
  if (!(e_j > 0.0) || !std::isfinite(e_j))
    throw validation_error("e_j must be positive (got " + std::to_string(e_j) + ")");
  if (!(e_l > 0.0) || !std::isfinite(e_l))
    throw validation_error("e_l must be positive (got " + std::to_string(e_l) + ")");
}

std::vector<std::string> FluxoniumParams::warnings() const {
  std::vector<std::string> out;
  const double ratio = e_j / e_c;
  if (ratio < 0.5 || ratio > 20.0) {
    std::ostringstream os;
    os << "e_j/e_c = " << ratio << " outside the typical fluxonium range [0.5, 20]";
    out.push_back(os.str());
  }
  return out;
}

double FluxoniumParams::phi_zp() const { return std::pow(2.0 * e_c / e_l, 0.25); }

double FluxoniumParams::f_osc() const { return std::sqrt(8.0 * e_c * e_l); }

void FluxBias::validate() const {
  if (!std::isfinite(phi_ext)) throw validation_error("phi_ext must be finite");
}

double EigenSolution::transition(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_levels() || j >= n_levels())
    throw validation_error("transition level index out of range");
  return energies(j) - energies(i);
}

EigenSolution solve_spectrum(const FluxoniumParams& params, const FluxBias& flux,
                             int basis_size, int n_levels) {
  params.validate();
  flux.validate();
  if (n_levels < 1) throw validation_error("n_levels must be >= 1");
  const int retained = std::max(4, n_levels);
  if (basis_size < 4 * n_levels)
    throw validation_error("basis_size must be at least 4*n_levels");
  if (basis_size < retained)
    throw validation_error("basis_size smaller than retained level count");

  const double phi_e = reduce_flux(flux.phi_ext);
  const double zp = params.phi_zp();
  const double theta = kTwoPi * phi_e;

  const ChiEigen ce = chi_eigen(basis_size, zp);
  // cos(phi) = cos(chi - theta) = cos(theta) cos(chi) + sin(theta) sin(chi)
  Eigen::VectorXd fl(basis_size);
  for (int m = 0; m < basis_size; ++m)
    fl(m) = std::cos(theta) * std::cos(ce.lambda(m)) +
            std::sin(theta) * std::sin(ce.lambda(m));
  Eigen::MatrixXd h = ce.v * fl.asDiagonal() * ce.v.transpose();
  h *= -params.e_j;
  const double fosc = params.f_osc();
  for (int m = 0; m < basis_size; ++m) h(m, m) += fosc * (m + 0.5);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success)
    throw solver_error("fluxonium eigensolve failed (basis " +
                       std::to_string(basis_size) + ")");

  EigenSolution sol;
  sol.params = params;
  sol.phi_ext = phi_e;
  sol.basis_size = basis_size;
  sol.phi_zp = zp;
  sol.energies = es.eigenvalues().head(retained);
  sol.eigenvectors = es.eigenvectors().leftCols(retained);

  // Truncation check: retained states must not lean on the top of the basis.
  const int tail = std::max(3, basis_size / 20);
  for (int k = 0; k < retained; ++k) {
    const double w = sol.eigenvectors.col(k).tail(tail).squaredNorm();
    if (w > 1e-6) {
      std::ostringstream os;
      os << "unconverged: basis " << basis_size << " too small (level " << k
         << " tail weight " << w << ")";
      throw solver_error(os.str());
    }
  }
  return sol;
}

EigenSolution converged_spectrum(const FluxoniumParams& params, const FluxBias& flux,
                                 int n_levels, double rel_tol, int start_basis,
                                 int basis_cap) {
  if (!(rel_tol > 0.0)) throw validation_error("rel_tol must be positive");
  const int retained = std::max(4, n_levels);
  int basis = std::max(start_basis, 4 * n_levels);

  auto try_solve = [&](int b) -> std::optional<EigenSolution> {
    try {
      return solve_spectrum(params, flux, b, n_levels);
    } catch (const solver_error&) {
      return std::nullopt;  // keep doubling
    }
  };

  std::optional<EigenSolution> prev = try_solve(basis);
  while (2 * basis <= basis_cap) {
    basis *= 2;
    std::optional<EigenSolution> cur = try_solve(basis);
    if (prev && cur) {
      bool ok = true;
      for (int k = 1; k < retained && ok; ++k) {
        const double a = prev->transition(0, k);
        const double b = cur->transition(0, k);
        if (std::abs(a - b) > rel_tol * std::max(std::abs(b), 1e-300)) ok = false;
      }
      if (ok) return *cur;
    }
    prev = std::move(cur);
  }
  throw solver_error("unconverged: basis cap " + std::to_string(basis_cap) +
                     " reached without transition convergence");
}

MatrixElements matrix_elements(const EigenSolution& sol, int i, int j) {
  if (i < 0 || j < 0 || i >= sol.n_levels() || j >= sol.n_levels())
    throw validation_error("matrix element level index out of range");

  const ChiEigen ce = chi_eigen(sol.basis_size, sol.phi_zp);
  const Eigen::VectorXd wi = ce.v.transpose() * sol.eigenvectors.col(i);
  const Eigen::VectorXd wj = ce.v.transpose() * sol.eigenvectors.col(j);

  const double theta = kTwoPi * sol.phi_ext;
  double chi_elem = 0.0, sin_half = 0.0;
  for (int m = 0; m < sol.basis_size; ++m) {
    const double prod = wi(m) * wj(m);
    chi_elem += prod * ce.lambda(m);
    // sin(phi/2) = sin(chi/2) cos(theta/2) - cos(chi/2) sin(theta/2)
    sin_half += prod * (std::sin(0.5 * ce.lambda(m)) * std::cos(0.5 * theta) -
                        std::cos(0.5 * ce.lambda(m)) * std::sin(0.5 * theta));
  }
  double phi_elem = chi_elem;
  if (i == j) phi_elem -= theta;  // phi = chi - 2 pi phi_ext on the diagonal

  MatrixElements e;
  e.phi_01 = phi_elem;
  e.sin_half_phi_01 = sin_half;
  e.abs_phi_01 = std::abs(phi_elem);
  e.abs_sin_half_phi_01 = std::abs(sin_half);
  return e;
}

double flux_dispersion(const FluxoniumParams& params, const FluxBias& flux) {
  const EigenSolution center = converged_spectrum(params, flux, 2, 1e-10);
  const int basis = center.basis_size;
  const double f01_scale = center.f01();

  auto f01_at = [&](double phi) {
    return solve_spectrum(params, FluxBias{phi}, basis, 2).f01();
  };

  const double phi = flux.phi_ext;
  const double d1 = 1e-5, d2 = 0.5e-5;
  const double g1 = (f01_at(phi + d1) - f01_at(phi - d1)) / (2.0 * d1);
  const double g2 = (f01_at(phi + d2) - f01_at(phi - d2)) / (2.0 * d2);
  const double g = (4.0 * g2 - g1) / 3.0;  // Richardson, O(step^4)

  const double scale = std::max(std::abs(g), 1e-2 * f01_scale);
  if (std::abs(g2 - g1) > 1e-4 * scale)
    throw solver_error("flux_dispersion: finite-difference stencil unstable");
  return kTwoPi * g;
}

std::vector<SweepRow> spectrum_sweep(const FluxoniumParams& params,
                                     const std::vector<FluxBias>& grid, int n_levels) {
  if (grid.empty()) throw validation_error("spectrum_sweep: empty flux grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    try {
      const EigenSolution sol = converged_spectrum(params, grid[r], n_levels, 1e-9);
      const MatrixElements elems = matrix_elements(sol, 0, 1);
      SweepRow row;
      row.phi_ext = grid[r].phi_ext;
      for (int k = 1; k < std::max(2, n_levels); ++k)
        row.transitions.push_back(sol.transition(0, k));
      row.abs_phi_01 = elems.abs_phi_01;
      row.abs_sin_half_phi_01 = elems.abs_sin_half_phi_01;
      row.dispersion = flux_dispersion(params, grid[r]);
      row.basis_size = sol.basis_size;
      rows.push_back(std::move(row));
    } catch (const solver_error& e) {
      std::ostringstream os;
      os << "row " << r << " (phi_ext=" << grid[r].phi_ext << "): " << e.what();
      throw solver_error(os.str());
    }
  }
  return rows;
}

}  // namespace fluxkit
