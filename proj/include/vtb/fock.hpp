#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "vtb/common.hpp"

namespace vtb::fock {

// Multimode Fock states with total excitation ||s||_1 <= sigma_max, in graded
// lexicographic order (total excitation first, then lexicographic in s).
class FockBasis {
 public:
  static constexpr Eigen::Index kDefaultMaxDim = 200000;

  FockBasis(int n_modes, int sigma_max, Eigen::Index max_dim = kDefaultMaxDim);

  int n_modes() const { return n_modes_; }
  int sigma_max() const { return sigma_max_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(totals_.size()); }

  std::span<const int> state(Eigen::Index i) const {
    return {states_.data() + i * n_modes_, static_cast<std::size_t>(n_modes_)};
  }
  int total(Eigen::Index i) const { return totals_[static_cast<std::size_t>(i)]; }

  // -1 when s is not part of the basis.
  Eigen::Index index_of(std::span<const int> s) const;

  // Truncated a_mu and a_mu^dag.
  const SpMat& lower(int mu) const { return lower_[static_cast<std::size_t>(mu)]; }
  const SpMat& raise(int mu) const { return raise_[static_cast<std::size_t>(mu)]; }

 private:
  std::uint64_t encode(std::span<const int> s) const;

  int n_modes_;
  int sigma_max_;
  std::vector<int> states_;
  std::vector<int> totals_;
  std::unordered_map<std::uint64_t, Eigen::Index> index_;
  std::vector<SpMat> lower_;
  std::vector<SpMat> raise_;
};

// Binomial C(n_modes + sigma_max, n_modes) without constructing the basis.
double basis_dimension(int n_modes, int sigma_max);

// exp(1/2 a^dag^T Q a^dag + l^T a^dag). Q must be symmetric. Pure raising, so the
// truncated Taylor series is exact on the retained states.
CMat raising_exponential(const FockBasis& basis, const CMat& quad, const CVec& lin);
// exp(1/2 a^T Q a + l^T a); the transpose of the raising counterpart.
CMat lowering_exponential(const FockBasis& basis, const CMat& quad, const CVec& lin);

// exp(-1/2 a^dag^T X a^dag) and exp(1/2 a^T Z a).
Mat exp_quadratic_raising(const FockBasis& basis, const Mat& x);
Mat exp_quadratic_lowering(const FockBasis& basis, const Mat& z);

// Excitation-preserving operator Gamma(M) = :exp(a^dag^T (M - 1) a):, acting as
// a^dag_nu -> sum_mu a^dag_mu M_{mu nu} on every retained state.
CMat number_conserving(const FockBasis& basis, const CMat& m);

// :exp(a^dag^T W a): = Gamma(1 + W).
Mat normal_ordered_quadratic(const FockBasis& basis, const Mat& w);

// <s'| T_theta |s> with T_theta = exp(-i theta . n), normal ordered as
// exp(-theta^T Delta theta / 4) V^dag_theta V_{-theta}.
Mat translation_matrix(const FockBasis& basis, const Mat& xi, const Vec& theta);

// Bogoliubov data of the squeeze S with S a S^dag = u a + v a^dag, mapping the
// oscillator of `xi` onto the oscillator of `xi_prime` (both centred at the origin).
struct SqueezeData {
  Mat u, v;
  Mat u_inv;  // e^{-Y}
  Mat x, z;   // X = u^{-1} v, Z = v u^{-1}
  std::optional<Mat> y;  // real principal ln u, when it exists
  // exp(-Tr Y / 2) = |det u|^{-1/2}; the absolute value keeps <0|S|0> > 0, i.e.
  // both ground states are the positive Gaussians.
  double prefactor = 1.0;

  bool is_identity(double tol = 1e-14) const;
  // Throws Error(LogBranch) when u has no real principal logarithm.
  const Mat& log_u() const;
};

SqueezeData identity_squeeze(int n_modes);
SqueezeData bogoliubov(const Mat& xi, const Mat& xi_prime);

// <s'| S |s> in disentangled form prefactor * e^{-a^dag X a^dag/2} Gamma(e^{-Y}) e^{a Z a/2}.
Mat squeeze_matrix(const FockBasis& basis, const SqueezeData& sq);

// <s'| S_left^dag e^{lambda . a^dag} e^{-lambda . a} S_right |s> from the closed
// normal-ordered product of two disentangled squeezes with a real displacement.
Mat squeezed_displaced_block(const FockBasis& basis, const SqueezeData& sq_left,
                             const SqueezeData& sq_right, const Vec& lambda);

// n_j = sum_mu (-i/sqrt 2) Xi^{-T}_{j mu} (a_mu - a^dag_mu).
std::vector<CSpMat> charge_op_matrices(const FockBasis& basis, const Mat& xi);

enum class SandwichedOp { Charge, ExpIPhi };

// Commuting V_theta = exp(theta^T Xi^{-T} a / sqrt 2) to the right of n or e^{i w.phi}:
//   V_theta n           = (n + charge_shift) V_theta,   charge_shift = (i/2) Xi^{-T} Xi^{-1} theta
//   V_theta e^{i w.phi} = e^{i (w.phi + phase_shift)} V_theta,   phase_shift = w . theta / 2
struct ShiftRule {
  CVec charge_shift;
  double phase_shift = 0.0;
};
ShiftRule commute_V_past(SandwichedOp kind, const Vec& theta, const Mat& xi, const Vec& w = Vec());

// Normal-ordered matrix elements of O T_delta S in the ladder frame of `xi_left`,
// where S is a relative squeeze taking that frame's oscillator to the right
// state's oscillator (identity for unsqueezed pairs). Every operator is reduced
// to prefactor * exp(raising) * Gamma * exp(lowering), so truncation is exact.
class BlockEvaluator {
 public:
  BlockEvaluator(const FockBasis& basis, const Mat& xi_left, SqueezeData squeeze);

  // <s'| T_delta S |s>.
  CMat overlap(const Vec& delta) const;
  // <s'| e^{i w.phi} T_delta S |s>.
  CMat exp_i_phi(const Vec& delta, const Vec& w) const;
  // <s'| 4 n^T Ec n T_delta S |s> together with the overlap block.
  std::pair<CMat, CMat> kinetic_and_overlap(const Vec& delta, const Mat& ec) const;

 private:
  struct Linear {
    cplx log_prefactor;
    CVec raise;  // coefficient of a^dag after moving the squeeze's lowering part
    CVec lower;  // coefficient of a after the squeeze's excitation-preserving part
  };
  Linear linear_part(const Vec& delta, const Vec& w) const;
  CMat core_product(const Linear& lin) const;

  const FockBasis& basis_;
  Mat xi_;
  Mat xi_inv_;
  Mat delta_;
  SqueezeData sq_;
  bool squeezed_;
  Mat core_;  // e^{-a^dag X a^dag/2} Gamma(u^{-1}) e^{a Z a/2}, without prefactor
};

}  // namespace vtb::fock
