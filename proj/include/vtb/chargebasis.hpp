#pragma once

#include <functional>
#include <variant>

#include "vtb/circuit.hpp"

namespace vtb {

struct ChargeBasisConfig {
  int n_cut = 5;
  int levels = 4;
  double mem_cap_gb = 2.0;
};

using RSpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using CSpMatRow = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Charge-basis Hamiltonian. Real storage is used when every cosine phase offset
// is a multiple of pi; otherwise the matrix is complex Hermitian.
struct ChargeHamiltonian {
  std::variant<RSpMatRow, CSpMatRow> matrix;
  Vec diagonal;
  int n_cut = 0;
  Eigen::Index dim() const { return diagonal.size(); }
  bool is_real() const { return std::holds_alternative<RSpMatRow>(matrix); }
  long long nonzeros() const;
};

// Hilbert dimension (2 n_cut + 1)^N, or +inf when it overflows a double.
double charge_dimension(int n_nodes, int n_cut);

// Throws Error(DimensionOverflow) when matrix plus eigensolver workspace exceed the cap.
ChargeHamiltonian build_sparse_h(const CircuitSpec& spec, const ChargeBasisConfig& config);

struct EigenSolverOptions {
  int block_extra = 2;        // extra vectors beyond k in the search block
  int max_subspace_blocks = 5;
  int max_iterations = 2000;
  double rel_tol = 1e-10;     // residual norm relative to the matrix norm estimate
  Eigen::Index dense_limit = 2500;  // at or below this dimension solve densely
};

struct EigenSolverStats {
  int iterations = 0;
  double max_residual = 0.0;
  bool dense = false;
};

// k lowest eigenvalues in ascending order (block Davidson with a diagonal
// preconditioner, thick restart). Throws Error(NoConvergence).
Vec lowest_eigs(const ChargeHamiltonian& h, int k, const EigenSolverOptions& opts = {},
                EigenSolverStats* stats = nullptr);
Vec lowest_eigs(const RSpMatRow& h, int k, const EigenSolverOptions& opts = {}, EigenSolverStats* stats = nullptr);
Vec lowest_eigs(const CSpMatRow& h, int k, const EigenSolverOptions& opts = {}, EigenSolverStats* stats = nullptr);

struct EtaReport {
  double eta_avg = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  Vec per_level;
  bool fewer_than_four = false;
};

// Relative deviations (E - exact)/exact over the lowest min(4, n) levels, n being
// the shorter of the two spectra.
EtaReport eta_metrics(const Vec& approx, const Vec& exact);

struct ReferenceSpectrum {
  Vec energies;
  int n_cut = 0;
  bool converged = false;
  long long nonzeros = 0;
};

// Raises n_cut from `n_cut_start` until two successive cutoffs agree to `tol`
// (GHz) on every requested level, or until the memory cap or `n_cut_max` stops it.
ReferenceSpectrum converged_reference(const CircuitSpec& spec, int levels, int n_cut_start, int n_cut_max,
                                      double tol = 1e-6, double mem_cap_gb = 2.0);

}  // namespace vtb
