#include "vtb/fock.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

namespace vtb::fock {

double basis_dimension(int n_modes, int sigma_max) {
  double d = 1.0;
  for (int k = 1; k <= n_modes; ++k) d = d * (sigma_max + k) / k;
  return std::round(d);
}

FockBasis::FockBasis(int n_modes, int sigma_max, Eigen::Index max_dim)
    : n_modes_(n_modes), sigma_max_(sigma_max) {
  if (n_modes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one mode");
  if (sigma_max < 0) throw Error(ErrorCode::InvalidArgument, "sigma_max must be non-negative");
  const double d = basis_dimension(n_modes, sigma_max);
  if (d > static_cast<double>(max_dim))
    throw Error(ErrorCode::DimensionOverflow,
                "Fock dimension " + std::to_string(static_cast<long long>(d)) + " exceeds " +
                    std::to_string(static_cast<long long>(max_dim)));
  const double code_bits = n_modes * std::log2(sigma_max + 1.0);
  if (code_bits >= 63.0) throw Error(ErrorCode::DimensionOverflow, "state code does not fit 64 bits");

  const auto dim = static_cast<std::size_t>(d);
  states_.reserve(dim * static_cast<std::size_t>(n_modes));
  totals_.reserve(dim);
  std::vector<int> s(static_cast<std::size_t>(n_modes), 0);
  for (int k = 0; k <= sigma_max; ++k) {
    // Lexicographically ascending compositions of k into n_modes parts.
    std::fill(s.begin(), s.end(), 0);
    s.back() = k;
    while (true) {
      states_.insert(states_.end(), s.begin(), s.end());
      totals_.push_back(k);
      // Next composition: the rightmost i < n-1 with a non-empty suffix grows by one.
      int i = n_modes - 2;
      int tail = s.back();
      while (i >= 0 && tail == 0) {
        tail += s[static_cast<std::size_t>(i)];
        --i;
      }
      if (i < 0) break;
      // s[i] grows by one; everything after it is reset with the remainder at the end.
      int rest = tail - 1;
      s[static_cast<std::size_t>(i)] += 1;
      for (int j = i + 1; j < n_modes; ++j) s[static_cast<std::size_t>(j)] = 0;
      s.back() = rest;
    }
  }

  index_.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) index_.emplace(encode(state(static_cast<Eigen::Index>(i))), i);

  lower_.resize(static_cast<std::size_t>(n_modes));
  raise_.resize(static_cast<std::size_t>(n_modes));
  std::vector<int> t(static_cast<std::size_t>(n_modes));
  for (int mu = 0; mu < n_modes; ++mu) {
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index c = 0; c < this->dim(); ++c) {
      auto sc = state(c);
      if (sc[static_cast<std::size_t>(mu)] == 0) continue;
      std::copy(sc.begin(), sc.end(), t.begin());
      t[static_cast<std::size_t>(mu)] -= 1;
      trip.emplace_back(index_of(t), c, std::sqrt(static_cast<double>(sc[static_cast<std::size_t>(mu)])));
    }
    SpMat a(this->dim(), this->dim());
    a.setFromTriplets(trip.begin(), trip.end());
    lower_[static_cast<std::size_t>(mu)] = a;
    raise_[static_cast<std::size_t>(mu)] = SpMat(a.transpose());
  }
}

std::uint64_t FockBasis::encode(std::span<const int> s) const {
  std::uint64_t code = 0;
  for (int i = n_modes_ - 1; i >= 0; --i)
    code = code * static_cast<std::uint64_t>(sigma_max_ + 1) + static_cast<std::uint64_t>(s[static_cast<std::size_t>(i)]);
  return code;
}

Eigen::Index FockBasis::index_of(std::span<const int> s) const {
  if (static_cast<int>(s.size()) != n_modes_) return -1;
  int total = 0;
  for (int x : s) {
    if (x < 0) return -1;
    total += x;
  }
  if (total > sigma_max_) return -1;
  auto it = index_.find(encode(s));
  return it == index_.end() ? -1 : it->second;
}

namespace {

// Sparse generator 1/2 a^dag^T Q a^dag + l^T a^dag on the truncated space.
CSpMat raising_generator(const FockBasis& basis, const CMat& quad, const CVec& lin) {
  const int n = basis.n_modes();
  const bool has_quad = quad.size() > 0;
  const bool has_lin = lin.size() > 0;
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<int> t(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < basis.dim(); ++c) {
    auto s = basis.state(c);
    if (basis.total(c) >= basis.sigma_max()) continue;
    std::copy(s.begin(), s.end(), t.begin());
    if (has_lin) {
      for (int mu = 0; mu < n; ++mu) {
        if (lin(mu) == cplx(0.0)) continue;
        t[static_cast<std::size_t>(mu)] += 1;
        trip.emplace_back(basis.index_of(t), c, lin(mu) * std::sqrt(t[static_cast<std::size_t>(mu)] * 1.0));
        t[static_cast<std::size_t>(mu)] -= 1;
      }
    }
    if (has_quad && basis.total(c) + 2 <= basis.sigma_max()) {
      for (int mu = 0; mu < n; ++mu) {
        for (int nu = mu; nu < n; ++nu) {
          const cplx q = mu == nu ? 0.5 * quad(mu, mu) : 0.5 * (quad(mu, nu) + quad(nu, mu));
          if (q == cplx(0.0)) continue;
          double amp = std::sqrt(t[static_cast<std::size_t>(mu)] + 1.0);
          t[static_cast<std::size_t>(mu)] += 1;
          amp *= std::sqrt(t[static_cast<std::size_t>(nu)] + 1.0);
          t[static_cast<std::size_t>(nu)] += 1;
          trip.emplace_back(basis.index_of(t), c, q * amp);
          t[static_cast<std::size_t>(mu)] -= 1;
          t[static_cast<std::size_t>(nu)] -= 1;
        }
      }
    }
  }
  CSpMat g(basis.dim(), basis.dim());
  g.setFromTriplets(trip.begin(), trip.end());
  return g;
}

// e^G M for a nilpotent raising generator G.
CMat apply_exp_left(const CSpMat& g, const CMat& m, int max_power) {
  CMat out = m;
  CMat term = m;
  for (int k = 1; k <= max_power; ++k) {
    term = (g * term) / static_cast<double>(k);
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
    out += term;
  }
  return out;
}

// M e^G for a nilpotent lowering generator G.
CMat apply_exp_right(const CMat& m, const CSpMat& g, int max_power) {
  CMat out = m;
  CMat term = m;
  for (int k = 1; k <= max_power; ++k) {
    term = (term * g) / static_cast<double>(k);
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
    out += term;
  }
  return out;
}

CSpMat linear_raising(const FockBasis& basis, const CVec& coef) {
  CSpMat g(basis.dim(), basis.dim());
  for (int mu = 0; mu < basis.n_modes(); ++mu)
    if (coef(mu) != cplx(0.0)) g += coef(mu) * basis.raise(mu).cast<cplx>();
  return g;
}

CSpMat linear_lowering(const FockBasis& basis, const CVec& coef) {
  CSpMat g(basis.dim(), basis.dim());
  for (int mu = 0; mu < basis.n_modes(); ++mu)
    if (coef(mu) != cplx(0.0)) g += coef(mu) * basis.lower(mu).cast<cplx>();
  return g;
}

double cond_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& sv = svd.singularValues();
  if (sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

}  // namespace

CMat raising_exponential(const FockBasis& basis, const CMat& quad, const CVec& lin) {
  const CSpMat g = raising_generator(basis, quad, lin);
  return apply_exp_left(g, CMat::Identity(basis.dim(), basis.dim()), basis.sigma_max());
}

CMat lowering_exponential(const FockBasis& basis, const CMat& quad, const CVec& lin) {
  return raising_exponential(basis, quad, lin).transpose();
}

Mat exp_quadratic_raising(const FockBasis& basis, const Mat& x) {
  return raising_exponential(basis, (-x).cast<cplx>(), CVec()).real();
}

Mat exp_quadratic_lowering(const FockBasis& basis, const Mat& z) {
  return lowering_exponential(basis, z.cast<cplx>(), CVec()).real();
}

CMat number_conserving(const FockBasis& basis, const CMat& m) {
  const int n = basis.n_modes();
  if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::InvalidArgument, "Gamma matrix has wrong size");
  const Eigen::Index d = basis.dim();
  CMat out = CMat::Zero(d, d);
  out(0, 0) = 1.0;
  std::vector<int> t(static_cast<std::size_t>(n));
  // Sector offsets keep the per-column loop restricted to the previous excitation shell.
  std::vector<Eigen::Index> shell_start(static_cast<std::size_t>(basis.sigma_max() + 2), d);
  for (Eigen::Index i = d - 1; i >= 0; --i) shell_start[static_cast<std::size_t>(basis.total(i))] = i;
  for (Eigen::Index c = 1; c < d; ++c) {
    auto s = basis.state(c);
    int nu = 0;
    while (s[static_cast<std::size_t>(nu)] == 0) ++nu;
    std::copy(s.begin(), s.end(), t.begin());
    t[static_cast<std::size_t>(nu)] -= 1;
    const Eigen::Index prev = basis.index_of(t);
    const double norm = 1.0 / std::sqrt(static_cast<double>(s[static_cast<std::size_t>(nu)]));
    const int k = basis.total(c) - 1;
    const Eigen::Index lo = shell_start[static_cast<std::size_t>(k)];
    const Eigen::Index hi = shell_start[static_cast<std::size_t>(k + 1)];
    for (Eigen::Index r = lo; r < hi; ++r) {
      const cplx val = out(r, prev);
      if (val == cplx(0.0)) continue;
      auto sr = basis.state(r);
      std::copy(sr.begin(), sr.end(), t.begin());
      for (int mu = 0; mu < n; ++mu) {
        const cplx coef = m(mu, nu);
        if (coef == cplx(0.0)) continue;
        t[static_cast<std::size_t>(mu)] += 1;
        out(basis.index_of(t), c) += norm * coef * std::sqrt(static_cast<double>(t[static_cast<std::size_t>(mu)])) * val;
        t[static_cast<std::size_t>(mu)] -= 1;
      }
    }
  }
  return out;
}

Mat normal_ordered_quadratic(const FockBasis& basis, const Mat& w) {
  return number_conserving(basis, (Mat::Identity(w.rows(), w.cols()) + w).cast<cplx>()).real();
}

Mat translation_matrix(const FockBasis& basis, const Mat& xi, const Vec& theta) {
  const Mat xi_inv = xi.inverse();
  const Vec p = xi_inv * theta / std::sqrt(2.0);
  const Mat delta = xi_inv.transpose() * xi_inv;
  const double pref = std::exp(-0.25 * theta.dot(delta * theta));
  const CVec pc = p.cast<cplx>();
  CMat m = apply_exp_left(linear_raising(basis, pc), CMat::Identity(basis.dim(), basis.dim()), basis.sigma_max());
  m = apply_exp_right(m, linear_lowering(basis, -pc), basis.sigma_max());
  return pref * m.real();
}

bool SqueezeData::is_identity(double tol) const {
  const Eigen::Index n = u.rows();
  return (u - Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= tol && v.cwiseAbs().maxCoeff() <= tol;
}

const Mat& SqueezeData::log_u() const {
  if (!y) throw Error(ErrorCode::LogBranch, "u has a real eigenvalue <= 0; no real principal logarithm");
  return *y;
}

SqueezeData identity_squeeze(int n_modes) {
  SqueezeData sq;
  sq.u = Mat::Identity(n_modes, n_modes);
  sq.v = Mat::Zero(n_modes, n_modes);
  sq.u_inv = sq.u;
  sq.x = sq.v;
  sq.z = sq.v;
  sq.y = Mat::Zero(n_modes, n_modes);
  sq.prefactor = 1.0;
  return sq;
}

SqueezeData bogoliubov(const Mat& xi, const Mat& xi_prime) {
  if (xi.rows() != xi.cols() || xi_prime.rows() != xi.rows() || xi_prime.cols() != xi.cols())
    throw Error(ErrorCode::InvalidArgument, "mode matrices must be square and of equal size");
  const Mat a = xi_prime.inverse() * xi;
  const Mat b = xi_prime.transpose() * xi.inverse().transpose();
  SqueezeData sq;
  sq.u = 0.5 * (a + b);
  sq.v = 0.5 * (a - b);
  if (cond_number(sq.u) > 1e14) throw Error(ErrorCode::SingularU, "u is numerically singular");
  sq.u_inv = sq.u.inverse();
  sq.x = sq.u_inv * sq.v;
  sq.z = sq.v * sq.u_inv;
  // X and Z are symmetric for a symplectic (u, v); remove rounding asymmetry.
  sq.x = 0.5 * (sq.x + sq.x.transpose()).eval();
  sq.z = 0.5 * (sq.z + sq.z.transpose()).eval();
  sq.prefactor = 1.0 / std::sqrt(std::abs(sq.u.determinant()));

  Eigen::EigenSolver<Mat> es(sq.u, false);
  bool real_log = true;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cplx ev = es.eigenvalues()(i);
    if (std::abs(ev.imag()) <= 1e-12 * std::abs(ev) && ev.real() <= 0.0) real_log = false;
  }
  if (real_log) sq.y = Mat(sq.u.log());
  return sq;
}

Mat squeeze_matrix(const FockBasis& basis, const SqueezeData& sq) {
  const int sm = basis.sigma_max();
  CMat m = number_conserving(basis, sq.u_inv.cast<cplx>());
  m = apply_exp_left(raising_generator(basis, (-sq.x).cast<cplx>(), CVec()), m, sm);
  m = apply_exp_right(m, CSpMat(raising_generator(basis, sq.z.cast<cplx>(), CVec()).transpose()), sm);
  return sq.prefactor * m.real();
}

Mat squeezed_displaced_block(const FockBasis& basis, const SqueezeData& sq_left,
                             const SqueezeData& sq_right, const Vec& lambda) {
  const Eigen::Index n = basis.n_modes();
  const Mat id = Mat::Identity(n, n);
  const Mat& x = sq_right.x;
  const Mat& z = sq_right.z;
  const Mat& ui = sq_right.u_inv;
  const Mat& xp = sq_left.x;
  const Mat& zp = sq_left.z;
  const Mat& upi = sq_left.u_inv;

  const Mat one_minus = id - x * xp;
  if (cond_number(one_minus) > 1e12)
    throw Error(ErrorCode::NearSingularP, "1 - X X' is close to singular");
  const Mat p = one_minus.inverse();
  const Mat q = 0.5 * (p.transpose() * xp + xp * p);
  const double det_r = (id - xp * x).determinant();
  if (!(det_r > 0.0)) throw Error(ErrorCode::NearSingularP, "det(1 - X' X) is not positive");

  const double pref = std::exp(-0.5 * lambda.dot((x + (id + x) * q * (id + x)) * lambda)) *
                      sq_left.prefactor * sq_right.prefactor / std::sqrt(det_r);
  const Mat raise_quad = -(upi.transpose() * p * x * upi - zp);
  const Vec raise_lin = upi.transpose() * p * (id + x) * lambda;
  const Mat gamma = upi.transpose() * p * ui;
  const Vec lower_lin = -(ui.transpose() * (id + q * (id + x)) * lambda);
  const Mat lower_quad = z - ui.transpose() * p.transpose() * xp * ui;

  const int sm = basis.sigma_max();
  CMat m = number_conserving(basis, gamma.cast<cplx>());
  m = apply_exp_left(raising_generator(basis, (0.5 * (raise_quad + raise_quad.transpose())).cast<cplx>(),
                                       raise_lin.cast<cplx>()),
                     m, sm);
  m = apply_exp_right(
      m,
      CSpMat(raising_generator(basis, (0.5 * (lower_quad + lower_quad.transpose())).cast<cplx>(),
                               lower_lin.cast<cplx>())
                 .transpose()),
      sm);
  return pref * m.real();
}

std::vector<CSpMat> charge_op_matrices(const FockBasis& basis, const Mat& xi) {
  const Mat xit = xi.inverse().transpose();
  const cplx c(0.0, -1.0 / std::sqrt(2.0));
  std::vector<CSpMat> out;
  for (int j = 0; j < basis.n_modes(); ++j) {
    CSpMat nj(basis.dim(), basis.dim());
    for (int mu = 0; mu < basis.n_modes(); ++mu)
      nj += (c * xit(j, mu)) * (basis.lower(mu) - basis.raise(mu)).cast<cplx>();
    out.push_back(nj);
  }
  return out;
}

ShiftRule commute_V_past(SandwichedOp kind, const Vec& theta, const Mat& xi, const Vec& w) {
  ShiftRule r;
  if (kind == SandwichedOp::Charge) {
    const Mat xi_inv = xi.inverse();
    const Vec s = 0.5 * (xi_inv.transpose() * (xi_inv * theta));
    r.charge_shift = cplx(0.0, 1.0) * s.cast<cplx>();
  } else {
    if (w.size() != theta.size()) throw Error(ErrorCode::InvalidArgument, "w has wrong length");
    r.phase_shift = 0.5 * w.dot(theta);
  }
  return r;
}

BlockEvaluator::BlockEvaluator(const FockBasis& basis, const Mat& xi_left, SqueezeData squeeze)
    : basis_(basis), xi_(xi_left), xi_inv_(xi_left.inverse()), sq_(std::move(squeeze)) {
  if (xi_.rows() != basis.n_modes() || sq_.u.rows() != basis.n_modes())
    throw Error(ErrorCode::BlockMismatch, "evaluator dimensions disagree with the basis");
  delta_ = xi_inv_.transpose() * xi_inv_;
  squeezed_ = !sq_.is_identity();
  if (squeezed_) {
    const int sm = basis.sigma_max();
    CMat m = number_conserving(basis, sq_.u_inv.cast<cplx>());
    m = apply_exp_left(raising_generator(basis, (-sq_.x).cast<cplx>(), CVec()), m, sm);
    m = apply_exp_right(m, CSpMat(raising_generator(basis, sq_.z.cast<cplx>(), CVec()).transpose()), sm);
    core_ = m.real();
  }
}

BlockEvaluator::Linear BlockEvaluator::linear_part(const Vec& delta, const Vec& w) const {
  const double r2 = std::sqrt(2.0);
  const cplx i1(0.0, 1.0);
  const CVec omega = i1 * (xi_.transpose() * w).cast<cplx>() / r2;
  const CVec tau = (xi_inv_ * delta).cast<cplx>() / r2;
  const CVec gamma = omega + tau;
  const CVec kappa = omega - tau;
  const CMat xc = sq_.x.cast<cplx>();
  Linear lin;
  lin.log_prefactor = i1 * 0.5 * w.dot(delta) - 0.25 * w.dot(xi_ * (xi_.transpose() * w)) -
                      0.25 * delta.dot(delta_ * delta) - 0.5 * (kappa.transpose() * xc * kappa)(0, 0) +
                      std::log(sq_.prefactor);
  lin.raise = gamma - xc * kappa;
  lin.lower = sq_.u_inv.transpose().cast<cplx>() * kappa;
  return lin;
}

CMat BlockEvaluator::core_product(const Linear& lin) const {
  const int sm = basis_.sigma_max();
  const Eigen::Index d = basis_.dim();
  if (squeezed_) {
    CMat m = apply_exp_left(linear_raising(basis_, lin.raise), core_.cast<cplx>(), sm);
    return apply_exp_right(m, linear_lowering(basis_, lin.lower), sm);
  }
  // Without a squeeze e^{rho a^dag} e^{kappa a} factorizes over modes:
  //   <p|e^{r a^dag} e^{k a}|q> = sum_t r^{p-t} k^{q-t} sqrt(p! q!) / ((p-t)! (q-t)! t!).
  // The intermediate occupation t never exceeds min(p, q), so truncation does not enter.
  const int n = basis_.n_modes();
  const int w = sm + 1;
  std::vector<double> fact(static_cast<std::size_t>(w), 1.0);
  for (int i = 1; i < w; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
  std::vector<cplx> table(static_cast<std::size_t>(n * w * w));
  for (int mu = 0; mu < n; ++mu) {
    std::vector<cplx> rp(static_cast<std::size_t>(w), 1.0), kp(static_cast<std::size_t>(w), 1.0);
    for (int i = 1; i < w; ++i) {
      rp[static_cast<std::size_t>(i)] = rp[static_cast<std::size_t>(i - 1)] * lin.raise(mu);
      kp[static_cast<std::size_t>(i)] = kp[static_cast<std::size_t>(i - 1)] * lin.lower(mu);
    }
    for (int p = 0; p < w; ++p) {
      for (int q = 0; q < w; ++q) {
        cplx acc = 0.0;
        for (int t = 0; t <= std::min(p, q); ++t)
          acc += rp[static_cast<std::size_t>(p - t)] * kp[static_cast<std::size_t>(q - t)] /
                 (fact[static_cast<std::size_t>(p - t)] * fact[static_cast<std::size_t>(q - t)] * fact[static_cast<std::size_t>(t)]);
        table[static_cast<std::size_t>((mu * w + p) * w + q)] =
            acc * std::sqrt(fact[static_cast<std::size_t>(p)] * fact[static_cast<std::size_t>(q)]);
      }
    }
  }
  CMat m(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    auto sc = basis_.state(c);
    for (Eigen::Index r = 0; r < d; ++r) {
      auto sr = basis_.state(r);
      cplx v = 1.0;
      for (int mu = 0; mu < n; ++mu)
        v *= table[static_cast<std::size_t>((mu * w + sr[static_cast<std::size_t>(mu)]) * w + sc[static_cast<std::size_t>(mu)])];
      m(r, c) = v;
    }
  }
  return m;
}

CMat BlockEvaluator::overlap(const Vec& delta) const {
  const Linear lin = linear_part(delta, Vec::Zero(delta.size()));
  return std::exp(lin.log_prefactor) * core_product(lin);
}

CMat BlockEvaluator::exp_i_phi(const Vec& delta, const Vec& w) const {
  if (w.size() != delta.size()) throw Error(ErrorCode::InvalidArgument, "w has wrong length");
  const Linear lin = linear_part(delta, w);
  return std::exp(lin.log_prefactor) * core_product(lin);
}

std::pair<CMat, CMat> BlockEvaluator::kinetic_and_overlap(const Vec& delta, const Mat& ec) const {
  const Eigen::Index n = basis_.n_modes();
  const Linear lin = linear_part(delta, Vec::Zero(n));
  const cplx c0 = std::exp(lin.log_prefactor);
  const CMat f = core_product(lin);

  // n_i n_j T_delta S = -d_i d_j T_{delta + t} S at t = 0.
  const double r2 = std::sqrt(2.0);
  const Mat& x = sq_.x;
  const Mat id = Mat::Identity(n, n);
  const Mat kd = -xi_inv_ / r2;
  const Vec kappa0 = -(xi_inv_ * delta) / r2;
  const Vec q1 = -0.5 * delta_ * delta - kd.transpose() * x * kappa0;
  const Mat q2 = -0.5 * delta_ - kd.transpose() * x * kd;
  const Mat rt = (id + x) * xi_inv_ / r2;
  const Mat kt = sq_.u_inv.transpose() * kd;

  const cplx s_cc = c0 * ((ec * q2).trace() + q1.dot(ec * q1));
  const CVec g = c0 * (ec * q1).cast<cplx>();
  const CSpMat g_alpha = linear_raising(basis_, rt.cast<cplx>() * g);
  const CSpMat g_beta = linear_lowering(basis_, kt.cast<cplx>() * g);
  const Mat w_aa = rt * ec * rt.transpose();
  const Mat w_ab = rt * ec * kt.transpose();
  const Mat w_bb = kt * ec * kt.transpose();
  const CSpMat q_aa = raising_generator(basis_, (2.0 * w_aa).cast<cplx>(), CVec());
  const CSpMat q_bb = CSpMat(raising_generator(basis_, (2.0 * w_bb).cast<cplx>(), CVec()).transpose());

  CMat d2 = s_cc * f;
  d2 += 2.0 * (g_alpha * f);
  d2 += 2.0 * (f * g_beta);
  CMat quad = q_aa * f;
  quad += f * q_bb;
  for (int mu = 0; mu < n; ++mu) {
    const CSpMat b_mu = linear_lowering(basis_, w_ab.row(mu).transpose().cast<cplx>());
    const CMat fb = f * b_mu;
    quad += 2.0 * (basis_.raise(mu).cast<cplx>() * fb);
  }
  d2 += c0 * quad;
  return {-4.0 * d2, c0 * f};
}

}  // namespace vtb::fock
