#pragma once

#include "vtb/common.hpp"

namespace vtb {

// Normal modes of the local quadratic Hamiltonian 4 n^T Ec n + 1/2 phi^T Gamma phi.
// With phi = Xi (a + a^dag)/sqrt(2) and n = -i Xi^{-T} (a - a^dag)/sqrt(2) the
// Hamiltonian reads sum_mu omega_mu (a^dag_mu a_mu + 1/2).
struct ModeData {
  Vec omega;    // GHz, ascending
  Mat xi;       // columns are the mode vectors
  Mat xi_inv_t; // Xi^{-T}

  int size() const { return static_cast<int>(omega.size()); }
  // Delta = Xi^{-T} Xi^{-1}, the inverse-width matrix of the ground-state Gaussian.
  Mat delta() const { return xi_inv_t * xi_inv_t.transpose(); }
};

ModeData normal_modes(const Mat& ec_matrix, const Mat& hessian);

// Scales column mu of Xi by lambdas(mu); frequencies are left untouched.
ModeData rescale(const ModeData& modes, const Vec& lambdas);

}  // namespace vtb
