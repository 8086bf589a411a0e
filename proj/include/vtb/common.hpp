#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace vtb {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using IVec = Eigen::VectorXi;
using SpMat = Eigen::SparseMatrix<double>;
using CSpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class ErrorCode {
  InvalidArgument,
  NotPositiveDefinite,
  NoMinimaFound,
  DegenerateHessian,
  DimensionOverflow,
  SingularU,
  LogBranch,
  NearSingularP,
  NeighborExplosion,
  BlockMismatch,
  AllDeflated,
  OptimizerDiverged,
  NoConvergence,
  ZeroExactEnergy,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vtb
