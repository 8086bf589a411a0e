#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vtb/circuit.hpp"
#include "vtb/fock.hpp"
#include "vtb/minima.hpp"
#include "vtb/modes.hpp"

namespace vtb {

enum class Scheme { IP, P, IPAC, PAC };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& name);  // ip | p | ipac | pac, case-insensitive

// Ansatz data of one minimum: the oscillator centre and the mode matrix used for
// its local Fock states (which depends on the scheme).
struct LocalBasis {
  Vec theta;
  ModeData modes;
};

// Overlap of the ground-state Gaussian of `a` (cell 0) with that of `b` translated
// by 2 pi j.
double gs_overlap(const LocalBasis& a, const LocalBasis& b, const IVec& j);

struct NeighborEntry {
  int m_left = 0;   // m'
  int m_right = 0;  // m
  IVec j;
  double overlap = 0.0;
};
using NeighborList = std::vector<NeighborEntry>;

struct NeighborOptions {
  double epsilon = 1e-3;
  std::size_t max_entries = 20000;
  // Excitation reach of the ansatz. With sigma_max > 0 the ground-state overlap
  // pref * e^{-nu} is replaced by pref * e^{-nu} max_{k <= sigma_max} nu^k / k!,
  // a bound on the size of matrix elements between states of up to sigma_max quanta.
  int sigma_max = 0;
};

// Estimated largest block element for a ground-state overlap `overlap` whose
// zero-separation value is `pref`.
double excited_overlap(double overlap, double pref, int sigma_max);

// Every ordered (m', m, j) whose (excitation-aware) overlap is >= epsilon plus all
// j = 0 pairs, sorted by (m', m, j). Closed under (m', m, j) -> (m, m', -j).
NeighborList select_neighbors(const std::vector<LocalBasis>& locals, const NeighborOptions& opts);

struct TBSystem {
  CMat h;
  CMat s;
  int n_minima = 0;
  Eigen::Index block_dim = 0;
  Vec ng;
};

// Bloch-summed Hamiltonian and overlap matrices over the (m, s) ansatz index.
TBSystem assemble(const CircuitSpec& spec, const std::vector<LocalBasis>& locals,
                  const fock::FockBasis& basis, const NeighborList& neighbors);

// Accumulating form of `assemble`: entries already added are skipped, so a growing
// (nested) neighbor list only costs the new blocks.
class Assembler {
 public:
  Assembler(const CircuitSpec& spec, std::vector<LocalBasis> locals, const fock::FockBasis& basis);
  ~Assembler();
  Assembler(const Assembler&) = delete;
  Assembler& operator=(const Assembler&) = delete;

  // Returns the number of newly evaluated canonical entries.
  std::size_t add(const NeighborList& neighbors);
  TBSystem system() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LowdinResult {
  Vec energies;
  Eigen::Index retained = 0;
  double overlap_condition = 0.0;  // largest / smallest retained overlap eigenvalue
};

// Canonical orthogonalization: overlap eigenvalues below delta_min * max are dropped.
LowdinResult lowdin_solve(const TBSystem& sys, double delta_min, int k);

struct AnharmonicResult {
  Vec lambda;
  double energy = 0.0;  // Rayleigh quotient at lambda
  bool converged = false;
  int evaluations = 0;
};

// Minimizes the Rayleigh quotient of the s = 0 Bloch sum of `local` over the
// harmonic lengths lambda_mu (simplex search in log lambda).
AnharmonicResult anharmonic_optimize(const CircuitSpec& spec, const LocalBasis& local,
                                     const NeighborOptions& nopts);

// r_{mm'} = (d/2)/l with minimum-image separations; diagonal uses lattice translates.
Mat localization_ratios(const std::vector<LocalBasis>& locals);

long long count_nnz(const CMat& m, double rel_threshold = 1e-12);
long long count_nnz(const CSpMat& m);

struct TBOptions {
  Scheme scheme = Scheme::IP;
  int sigma_max = 2;
  int levels = 4;
  double epsilon = 1e-3;
  bool adaptive_epsilon = true;
  double adapt_tol = 1e-6;  // GHz
  int max_refinements = 12;  // solves after the first
  int settle_count = 2;      // consecutive refinements below adapt_tol needed to stop
  double epsilon_floor = 1e-18;
  double delta_min = 1e-10;
  std::size_t max_neighbors = 20000;
  Eigen::Index max_dim = 20000;  // on M * D
  SearchOptions search;
};

struct TBResult {
  Vec energies;
  Eigen::Index total_dim = 0;
  Eigen::Index retained_dim = 0;
  long long n_h = 0;
  double epsilon_used = 0.0;
  std::size_t n_neighbors = 0;
  int n_minima = 0;
  Vec lambda;  // anharmonic correction of minimum 0, ones without correction
  bool optimizer_converged = true;
  double overlap_condition = 0.0;
};

// Local bases for every minimum under the given scheme. `lambda_out` receives the
// optimized harmonic lengths of minimum 0 (ones for IP/P).
std::vector<LocalBasis> scheme_bases(const CircuitSpec& spec, const std::vector<Minimum>& minima,
                                     Scheme scheme, const NeighborOptions& nopts,
                                     AnharmonicResult* lambda_out = nullptr);

TBResult solve_tight_binding(const CircuitSpec& spec, const TBOptions& opts);
// Same, reusing a precomputed minima list.
TBResult solve_tight_binding(const CircuitSpec& spec, const std::vector<Minimum>& minima,
                             const TBOptions& opts);

}  // namespace vtb
