#include "vtb/chargebasis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace vtb {

long long ChargeHamiltonian::nonzeros() const {
  return std::visit([](const auto& m) { return static_cast<long long>(m.nonZeros()); }, matrix);
}

double charge_dimension(int n_nodes, int n_cut) { return std::pow(2.0 * n_cut + 1.0, n_nodes); }

namespace {

constexpr int kDefaultBlockVectors = 4 + 2;

double estimate_bytes(double dim, std::size_t n_terms, bool real, const EigenSolverOptions& eo, int levels) {
  const double scalar = real ? 8.0 : 16.0;
  const double nnz = dim * (1.0 + 2.0 * static_cast<double>(n_terms));
  const double block = std::max(levels + eo.block_extra, kDefaultBlockVectors);
  return nnz * (scalar + 4.0) + dim * (8.0 + 2.0 * scalar * block * eo.max_subspace_blocks + 4.0 * scalar * block);
}

bool phases_real(const CircuitSpec& spec) {
  for (const CosineTerm& t : spec.cosine_terms) {
    if (std::abs(std::sin(t.phase_offset)) > 1e-15) return false;
  }
  return true;
}

template <class Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> assemble_charge(const CircuitSpec& spec, int n_cut, Vec& diag) {
  const int n = spec.n_nodes;
  const Eigen::Index base = 2 * n_cut + 1;
  std::vector<Eigen::Index> stride(static_cast<std::size_t>(n));
  Eigen::Index dim = 1;
  for (int i = 0; i < n; ++i) {
    stride[static_cast<std::size_t>(i)] = dim;
    dim *= base;
  }
  const Vec ng = spec.offset_charges.size() == n ? spec.offset_charges : Vec(Vec::Zero(n));
  const Mat ec4 = 4.0 * spec.ec_matrix;

  struct Hop {
    Eigen::Index offset;
    IVec w;
    Scalar value;
  };
  // Row n' couples to column n' - w with -E/2 e^{i p} and to n' + w with -E/2 e^{-i p}.
  std::vector<Hop> hops;
  for (const CosineTerm& t : spec.cosine_terms) {
    Scalar plus, minus;
    if constexpr (std::is_same_v<Scalar, double>) {
      plus = minus = -0.5 * t.amplitude * std::cos(t.phase_offset);
    } else {
      plus = -0.5 * t.amplitude * std::exp(cplx(0.0, t.phase_offset));
      minus = std::conj(plus);
    }
    Eigen::Index off = 0;
    for (int i = 0; i < n; ++i) off += t.weights(i) * stride[static_cast<std::size_t>(i)];
    hops.push_back({-off, IVec(-t.weights), plus});
    hops.push_back({off, t.weights, minus});
  }
  std::sort(hops.begin(), hops.end(), [](const Hop& a, const Hop& b) { return a.offset < b.offset; });

  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> h(dim, dim);
  h.reserve(Eigen::VectorXi::Constant(dim, static_cast<int>(hops.size() + 1)));
  diag.resize(dim);
  IVec q(n);
  Vec x(n);
  for (Eigen::Index r = 0; r < dim; ++r) {
    Eigen::Index c = r;
    for (int i = 0; i < n; ++i) {
      q(i) = static_cast<int>(c % base) - n_cut;
      c /= base;
    }
    x = q.cast<double>() - ng;
    const double d = x.dot(ec4 * x) + spec.energy_shift;
    diag(r) = d;
    bool diag_done = false;
    for (const Hop& hp : hops) {
      if (!diag_done && hp.offset > 0) {
        h.insert(r, r) = d;
        diag_done = true;
      }
      bool inside = true;
      for (int i = 0; i < n && inside; ++i) {
        const int qi = q(i) + hp.w(i);
        inside = qi >= -n_cut && qi <= n_cut;
      }
      if (!inside) continue;
      h.coeffRef(r, r + hp.offset) += hp.value;
    }
    if (!diag_done) h.insert(r, r) = d;
  }
  h.makeCompressed();
  return h;
}

template <class Scalar>
Vec davidson(const Eigen::SparseMatrix<Scalar, Eigen::RowMajor>& h, int k, const EigenSolverOptions& opts,
             EigenSolverStats* stats) {
  using MatS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VecS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = h.rows();
  if (h.cols() != n || n == 0) throw Error(ErrorCode::InvalidArgument, "matrix must be square and non-empty");
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidArgument, "invalid number of eigenvalues");
  EigenSolverStats local;
  EigenSolverStats& st = stats ? *stats : local;

  if (n <= opts.dense_limit) {
    MatS dense = MatS(h);
    dense = (0.5 * (dense + dense.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatS> es(dense, Eigen::EigenvaluesOnly);
    st.dense = true;
    st.iterations = 0;
    st.max_residual = 0.0;
    return es.eigenvalues().head(k);
  }

  const Vec diag = h.diagonal().real();
  double norm = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    double row = 0.0;
    for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(h, r); it; ++it) row += std::abs(it.value());
    norm = std::max(norm, row);
  }
  const double tol = opts.rel_tol * norm;
  const Eigen::Index b = std::min<Eigen::Index>(k + opts.block_extra, n);
  const Eigen::Index max_sub = std::min<Eigen::Index>(b * std::max(3, opts.max_subspace_blocks), n);
  const Eigen::Index keep = std::min<Eigen::Index>(2 * b, max_sub - b);

  MatS v(n, max_sub), w(n, max_sub);
  MatS g = MatS::Zero(max_sub, max_sub);
  Eigen::Index used = 0;

  // Start block: lowest diagonal entries with a small deterministic admixture so
  // that no symmetry sector is excluded from the search space.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + b, order.end(),
                    [&](Eigen::Index a, Eigen::Index c) { return diag(a) < diag(c) || (diag(a) == diag(c) && a < c); });
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  MatS block(n, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) block(r, c) = Scalar(1e-3 * gauss(rng));
    block(order[static_cast<std::size_t>(c)], c) += Scalar(1.0);
  }

  auto add_block = [&](MatS& t) {
    Eigen::Index added = 0;
    for (Eigen::Index c = 0; c < t.cols() && used < max_sub; ++c) {
      VecS x = t.col(c);
      const double before = x.norm();
      if (before == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        if (used > 0) x -= v.leftCols(used) * (v.leftCols(used).adjoint() * x);
      }
      const double after = x.norm();
      if (after < 1e-8 * before) continue;
      v.col(used) = x / after;
      w.col(used) = h * v.col(used);
      const VecS proj = v.leftCols(used + 1).adjoint() * w.col(used);
      for (Eigen::Index i = 0; i <= used; ++i) {
        g(i, used) = proj(i);
        g(used, i) = Eigen::numext::conj(proj(i));
      }
      ++used;
      ++added;
    }
    return added;
  };
  add_block(block);

  for (int it = 1; it <= opts.max_iterations; ++it) {
    st.iterations = it;
    MatS gs = g.topLeftCorner(used, used);
    gs = (0.5 * (gs + gs.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatS> es(gs);
    const Eigen::Index nb = std::min(b, used);
    const MatS y = es.eigenvectors().leftCols(nb);
    const Vec theta = es.eigenvalues().head(nb);
    const MatS x = v.leftCols(used) * y;
    MatS res = w.leftCols(used) * y;
    for (Eigen::Index c = 0; c < nb; ++c) res.col(c) -= theta(c) * x.col(c);

    double worst = 0.0;
    bool done = nb >= k;
    std::vector<Eigen::Index> open;
    for (Eigen::Index c = 0; c < nb; ++c) {
      const double rn = res.col(c).norm();
      if (c < k) worst = std::max(worst, rn);
      if (rn >= tol) {
        open.push_back(c);
        if (c < k) done = false;
      }
    }
    st.max_residual = worst;
    if (done) return theta.head(k);

    MatS t(n, static_cast<Eigen::Index>(open.size()));
    for (std::size_t i = 0; i < open.size(); ++i) {
      const Eigen::Index c = open[i];
      for (Eigen::Index r = 0; r < n; ++r) {
        double den = theta(c) - diag(r);
        if (std::abs(den) < 1e-8 * norm) den = den < 0 ? -1e-8 * norm : 1e-8 * norm;
        t(r, static_cast<Eigen::Index>(i)) = res(r, c) / den;
      }
    }

    if (used + t.cols() > max_sub) {
      // Thick restart on the lowest Ritz vectors.
      const Eigen::Index kk = std::min(keep, used);
      const MatS yk = es.eigenvectors().leftCols(kk);
      MatS nv = v.leftCols(used) * yk;
      MatS nw = w.leftCols(used) * yk;
      v.leftCols(kk) = nv;
      w.leftCols(kk) = nw;
      g.setZero();
      for (Eigen::Index i = 0; i < kk; ++i) g(i, i) = es.eigenvalues()(i);
      used = kk;
    }
    if (add_block(t) == 0) {
      // Corrections are already spanned; fall back to raw residuals.
      if (add_block(res) == 0) break;
    }
  }
  throw Error(ErrorCode::NoConvergence, "block Davidson did not converge in " + std::to_string(st.iterations) +
                                            " iterations; residual " + std::to_string(st.max_residual));
}

}  // namespace

ChargeHamiltonian build_sparse_h(const CircuitSpec& spec, const ChargeBasisConfig& config) {
  spec.validate();
  if (config.n_cut < 1) throw Error(ErrorCode::InvalidArgument, "n_cut must be at least 1");
  const double dim = charge_dimension(spec.n_nodes, config.n_cut);
  const bool real = phases_real(spec);
  const double bytes = estimate_bytes(dim, spec.cosine_terms.size(), real, EigenSolverOptions{}, config.levels);
  if (dim > 2e9 || bytes > config.mem_cap_gb * 1073741824.0)
    throw Error(ErrorCode::DimensionOverflow, "charge basis of dimension " + std::to_string(dim) + " needs about " +
                                                  std::to_string(bytes / 1073741824.0) + " GB");
  ChargeHamiltonian out;
  out.n_cut = config.n_cut;
  if (real)
    out.matrix = assemble_charge<double>(spec, config.n_cut, out.diagonal);
  else
    out.matrix = assemble_charge<cplx>(spec, config.n_cut, out.diagonal);
  return out;
}

Vec lowest_eigs(const RSpMatRow& h, int k, const EigenSolverOptions& opts, EigenSolverStats* stats) {
  return davidson<double>(h, k, opts, stats);
}

Vec lowest_eigs(const CSpMatRow& h, int k, const EigenSolverOptions& opts, EigenSolverStats* stats) {
  return davidson<cplx>(h, k, opts, stats);
}

Vec lowest_eigs(const ChargeHamiltonian& h, int k, const EigenSolverOptions& opts, EigenSolverStats* stats) {
  return std::visit([&](const auto& m) { return lowest_eigs(m, k, opts, stats); }, h.matrix);
}

EtaReport eta_metrics(const Vec& approx, const Vec& exact) {
  const Eigen::Index common = std::min(approx.size(), exact.size());
  if (common == 0) throw Error(ErrorCode::InvalidArgument, "spectra must be non-empty");
  const Eigen::Index n = std::min<Eigen::Index>(4, common);
  EtaReport r;
  r.fewer_than_four = common < 4;
  r.per_level.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (exact(i) == 0.0) throw Error(ErrorCode::ZeroExactEnergy, "exact level " + std::to_string(i) + " is zero");
    r.per_level(i) = (approx(i) - exact(i)) / exact(i);
  }
  r.eta_avg = r.per_level.mean();
  r.eta_min = r.per_level.minCoeff();
  r.eta_max = r.per_level.maxCoeff();
  return r;
}

ReferenceSpectrum converged_reference(const CircuitSpec& spec, int levels, int n_cut_start, int n_cut_max,
                                      double tol, double mem_cap_gb) {
  ReferenceSpectrum out;
  Vec prev;
  for (int nc = std::max(1, n_cut_start); nc <= n_cut_max; ++nc) {
    ChargeBasisConfig cfg;
    cfg.n_cut = nc;
    cfg.levels = levels;
    cfg.mem_cap_gb = mem_cap_gb;
    ChargeHamiltonian h;
    try {
      h = build_sparse_h(spec, cfg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DimensionOverflow) break;
      throw;
    }
    const int k = static_cast<int>(std::min<Eigen::Index>(levels, h.dim()));
    const Vec e = lowest_eigs(h, k);
    out.energies = e;
    out.n_cut = nc;
    out.nonzeros = h.nonzeros();
    if (prev.size() == e.size() && (e - prev).cwiseAbs().maxCoeff() < tol) {
      out.converged = true;
      break;
    }
    prev = e;
  }
  if (out.energies.size() == 0) throw Error(ErrorCode::DimensionOverflow, "no charge cutoff fits the memory cap");
  return out;
}

}  // namespace vtb
