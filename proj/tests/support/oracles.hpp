#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the normal-ordering code of the library; operators are built in an
// oversized product Fock space and composed with dense matrix exponentials.

#include <random>
#include <vector>

#include "vtb/circuit.hpp"
#include "vtb/fock.hpp"
#include "vtb/vtb.hpp"

namespace oracle {

using vtb::CMat;
using vtb::cplx;
using vtb::Mat;
using vtb::Vec;

// Product Fock space with `cutoff` levels per mode, mode 0 fastest.
struct BigSpace {
  int n_modes = 0;
  int cutoff = 0;
  std::vector<Mat> a;  // truncated annihilators
  Eigen::Index dim() const { return a.empty() ? 1 : a[0].rows(); }
  Eigen::Index index(std::span<const int> s) const;
};

BigSpace make_space(int n_modes, int cutoff);

// Rows of the big space that correspond to the states of `basis`.
std::vector<Eigen::Index> embed(const BigSpace& big, const vtb::fock::FockBasis& basis);

// <s'|op|s> on the small basis.
CMat restrict(const BigSpace& big, const vtb::fock::FockBasis& basis, const CMat& op);

// prod_mu exp(alpha_mu a_mu + beta_mu a^dag_mu), each factor exponentiated in its own mode.
CMat mode_exponential(const BigSpace& big, const vtb::CVec& alpha, const vtb::CVec& beta);

// exp(i w . phi) with phi = Xi (a + a^dag)/sqrt 2.
CMat exp_i_phi(const BigSpace& big, const Mat& xi, const Vec& w);

// exp(-i theta . n) with n = -i Xi^{-T} (a - a^dag)/sqrt 2.
Mat translation(const BigSpace& big, const Mat& xi, const Vec& theta);

// Columns are the Fock states of the oscillator `xi_prime`, written in the
// ladder basis of `xi`, for every state of `basis`. The phase of each column
// follows from a positive overlap of the two ground states.
Mat squeezed_states(const BigSpace& big, const vtb::fock::FockBasis& basis, const Mat& xi, const Mat& xi_prime);

// Charge and phase operators of the frame `xi`.
std::vector<CMat> charge_ops(const BigSpace& big, const Mat& xi);
std::vector<Mat> phase_ops(const BigSpace& big, const Mat& xi);

// Dense expm.
CMat expm(const CMat& m);
Mat expm(const Mat& m);

// Trapezoidal-rule overlap of two normalized ground-state Gaussians (1-D and 2-D).
double gaussian_overlap_quadrature(const vtb::LocalBasis& a, const vtb::LocalBasis& b, const vtb::IVec& j);

// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Mat random_spd(int n, double lo, double hi, std::mt19937_64& rng);
// Random invertible matrix with singular values in [lo, hi].
Mat random_frame(int n, double lo, double hi, std::mt19937_64& rng);

// Local harmonic basis with random inverse capacitance, curvature and centre.
vtb::LocalBasis random_local(int n, std::mt19937_64& rng);

// Lowest `k` eigenvalues of a dense Hermitian matrix.
Vec dense_lowest(const CMat& h, int k);

// Exact spectrum of a circuit in the charge basis by dense diagonalization,
// assembled directly from the Hamiltonian definition.
Vec dense_charge_spectrum(const vtb::CircuitSpec& spec, int n_cut, int k);

}  // namespace oracle
