#include "vtb/modes.hpp"

#include <cmath>

namespace vtb {

namespace {

void require_spd(const Mat& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be square");
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0.0))
    throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not positive definite");
}

}  // namespace

ModeData normal_modes(const Mat& ec_matrix, const Mat& hessian) {
  require_spd(ec_matrix, "ec_matrix");
  require_spd(hessian, "hessian");
  const Eigen::Index n = ec_matrix.rows();
  if (hessian.rows() != n) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");

  // Capacitance form C = (8 Ec)^{-1}; solve Gamma xi = omega^2 C xi through C = L L^T.
  const Mat cap = (8.0 * ec_matrix).inverse();
  Eigen::LLT<Mat> llt(0.5 * (cap + cap.transpose()));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "capacitance form is not positive definite");
  const Mat l = llt.matrixL();
  const Mat linv = l.inverse();
  Mat reduced = linv * hessian * linv.transpose();
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(reduced);
  if (!(es.eigenvalues()(0) > 0.0))
    throw Error(ErrorCode::NotPositiveDefinite, "reduced curvature is not positive definite");

  ModeData out;
  out.omega = es.eigenvalues().cwiseSqrt();
  // Normalization xi^T C xi = 1/omega gives xi^T Gamma xi = omega.
  out.xi = linv.transpose() * es.eigenvectors();
  for (Eigen::Index mu = 0; mu < n; ++mu) {
    out.xi.col(mu) /= std::sqrt(out.omega(mu));
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // First index wins ties so the sign convention is reproducible.
      if (std::abs(out.xi(i, mu)) > best * (1.0 + 1e-12)) {
        best = std::abs(out.xi(i, mu));
        imax = i;
      }
    }
    if (out.xi(imax, mu) < 0.0) out.xi.col(mu) *= -1.0;
  }
  out.xi_inv_t = out.xi.inverse().transpose();
  return out;
}

ModeData rescale(const ModeData& modes, const Vec& lambdas) {
  if (lambdas.size() != modes.size())
    throw Error(ErrorCode::InvalidArgument, "lambda vector has wrong length");
  if (!(lambdas.minCoeff() > 0.0))
    throw Error(ErrorCode::InvalidArgument, "lambdas must be positive");
  ModeData out = modes;
  for (Eigen::Index mu = 0; mu < lambdas.size(); ++mu) {
    out.xi.col(mu) *= lambdas(mu);
    out.xi_inv_t.col(mu) /= lambdas(mu);
  }
  return out;
}

}  // namespace vtb
