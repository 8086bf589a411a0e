#include "vtb/circuit.hpp"

#include <cmath>
#include <string>

namespace vtb {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoMinimaFound: return "NoMinimaFound";
    case ErrorCode::DegenerateHessian: return "DegenerateHessian";
    case ErrorCode::DimensionOverflow: return "DimensionOverflow";
    case ErrorCode::SingularU: return "SingularU";
    case ErrorCode::LogBranch: return "LogBranch";
    case ErrorCode::NearSingularP: return "NearSingularP";
    case ErrorCode::NeighborExplosion: return "NeighborExplosion";
    case ErrorCode::BlockMismatch: return "BlockMismatch";
    case ErrorCode::AllDeflated: return "AllDeflated";
    case ErrorCode::OptimizerDiverged: return "OptimizerDiverged";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroExactEnergy: return "ZeroExactEnergy";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

void CircuitSpec::validate() const {
  if (n_nodes < 1) throw Error(ErrorCode::InvalidArgument, "n_nodes must be positive");
  if (ec_matrix.rows() != n_nodes || ec_matrix.cols() != n_nodes)
    throw Error(ErrorCode::InvalidArgument, "ec_matrix must be n_nodes x n_nodes");
  if (offset_charges.size() != n_nodes)
    throw Error(ErrorCode::InvalidArgument, "offset_charges must have n_nodes entries");
  const double scale = ec_matrix.cwiseAbs().maxCoeff();
  if ((ec_matrix - ec_matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::InvalidArgument, "ec_matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(ec_matrix, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw Error(ErrorCode::NotPositiveDefinite, "ec_matrix is not positive definite");
  for (const auto& term : cosine_terms) {
    if (term.weights.size() != n_nodes)
      throw Error(ErrorCode::InvalidArgument, "cosine term weight vector has wrong length");
    if (term.weights.cwiseAbs().maxCoeff() == 0)
      throw Error(ErrorCode::InvalidArgument, "cosine term weights are all zero");
    if (!(term.amplitude >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "cosine term amplitude must be non-negative");
  }
}

namespace {

double term_argument(const CosineTerm& t, const Vec& phi) {
  return t.weights.cast<double>().dot(phi) + t.phase_offset;
}

}  // namespace

double potential(const CircuitSpec& spec, const Vec& phi) {
  double v = spec.energy_shift;
  for (const auto& t : spec.cosine_terms) v -= t.amplitude * std::cos(term_argument(t, phi));
  return v;
}

Vec potential_gradient(const CircuitSpec& spec, const Vec& phi) {
  Vec g = Vec::Zero(spec.n_nodes);
  for (const auto& t : spec.cosine_terms)
    g += t.amplitude * std::sin(term_argument(t, phi)) * t.weights.cast<double>();
  return g;
}

Mat potential_hessian(const CircuitSpec& spec, const Vec& phi) {
  Mat h = Mat::Zero(spec.n_nodes, spec.n_nodes);
  for (const auto& t : spec.cosine_terms) {
    const Vec w = t.weights.cast<double>();
    h += t.amplitude * std::cos(term_argument(t, phi)) * (w * w.transpose());
  }
  return h;
}

CircuitSpec flux_qubit_spec(double EJ, double ECJ, double ECg, double alpha, double flux_frac,
                            double ng1, double ng2) {
  if (!(EJ > 0.0) || !(ECJ > 0.0) || !(ECg > 0.0))
    throw Error(ErrorCode::InvalidArgument, "flux qubit energies must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");

  // Capacitances in units of e^2/(2 GHz): E_C = e^2/2C  =>  C = 1/E_C.
  const double cj = 1.0 / ECJ;
  const double cg = 1.0 / ECg;
  Mat cap(2, 2);
  cap << cj * (1.0 + alpha) + cg, -alpha * cj,
         -alpha * cj, cj * (1.0 + alpha) + cg;

  CircuitSpec spec;
  spec.n_nodes = 2;
  spec.ec_matrix = cap.inverse();
  spec.ec_matrix = 0.5 * (spec.ec_matrix + spec.ec_matrix.transpose()).eval();
  spec.offset_charges = Vec(2);
  spec.offset_charges << ng1, ng2;
  spec.energy_shift = EJ * (2.0 + alpha);
  spec.cosine_terms.push_back({EJ, (IVec(2) << 1, 0).finished(), 0.0});
  spec.cosine_terms.push_back({EJ, (IVec(2) << 0, 1).finished(), 0.0});
  spec.cosine_terms.push_back({alpha * EJ, (IVec(2) << 1, -1).finished(), kTwoPi * flux_frac});
  return spec;
}

Mat current_mirror_island_capacitance(int n_big, double ECB, double ECJ, double ECg) {
  const int islands = 2 * n_big;
  const double cb = 1.0 / ECB;
  const double cj = 1.0 / ECJ;
  const double cg = 1.0 / ECg;
  Mat cap = cg * Mat::Identity(islands, islands);
  auto couple = [&cap](int a, int b, double c) {
    cap(a, a) += c;
    cap(b, b) += c;
    cap(a, b) -= c;
    cap(b, a) -= c;
  };
  for (int k = 0; k < islands; ++k) couple(k, (k + 1) % islands, cj);
  for (int k = 0; k < n_big; ++k) couple(k, k + n_big, cb);
  return cap;
}

CircuitSpec current_mirror_spec(int n_big, double ECB, double ECJ, double ECg, double EJ,
                                double flux_frac, const Vec& ng) {
  if (n_big < 2) throw Error(ErrorCode::InvalidArgument, "current mirror needs n_big >= 2");
  if (!(ECB > 0.0) || !(ECJ > 0.0) || !(ECg > 0.0) || !(EJ > 0.0))
    throw Error(ErrorCode::InvalidArgument, "current mirror energies must be positive");
  const int islands = 2 * n_big;
  const int n = islands - 1;

  // Island fluxes in ring order: phi_k = phi_0 + sum_{i<k} junction_i. The last
  // coordinate (phi_0) is cyclic; its conjugate total charge is fixed to zero,
  // so the junction-variable inverse capacitance is the leading block of the
  // full inverse.
  Mat to_islands = Mat::Zero(islands, islands);
  for (int k = 0; k < islands; ++k) {
    to_islands(k, n) = 1.0;
    for (int i = 0; i < k; ++i) to_islands(k, i) = 1.0;
  }
  const Mat cap = current_mirror_island_capacitance(n_big, ECB, ECJ, ECg);
  const Mat cap_junction = to_islands.transpose() * cap * to_islands;
  const Mat inv = cap_junction.inverse();

  CircuitSpec spec;
  spec.n_nodes = n;
  spec.ec_matrix = 0.5 * (inv.topLeftCorner(n, n) + inv.topLeftCorner(n, n).transpose());
  spec.offset_charges = ng.size() == 0 ? Vec::Zero(n) : ng;
  if (spec.offset_charges.size() != n)
    throw Error(ErrorCode::InvalidArgument, "offset charge vector must have 2*n_big-1 entries");
  spec.energy_shift = islands * EJ;
  const double phase = -kTwoPi * flux_frac / islands;
  for (int i = 0; i < n; ++i) {
    IVec w = IVec::Zero(n);
    w(i) = 1;
    spec.cosine_terms.push_back({EJ, w, phase});
  }
  spec.cosine_terms.push_back({EJ, IVec::Ones(n), phase});
  return spec;
}

}  // namespace vtb
