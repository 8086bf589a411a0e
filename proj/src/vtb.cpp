#include "vtb/vtb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "vtb/nelder_mead.hpp"

namespace vtb {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::IP: return "IP";
    case Scheme::P: return "P";
    case Scheme::IPAC: return "IPAC";
    case Scheme::PAC: return "PAC";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "ip") return Scheme::IP;
  if (s == "p") return Scheme::P;
  if (s == "ipac") return Scheme::IPAC;
  if (s == "pac") return Scheme::PAC;
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + name + "'");
}

namespace {

Vec separation(const LocalBasis& a, const LocalBasis& b, const IVec& j) {
  return b.theta + kTwoPi * j.cast<double>() - a.theta;
}

struct PairGaussian {
  Mat a;        // (Delta^{-1} + Delta'^{-1})^{-1}
  double pref;  // overlap at zero separation
};

PairGaussian pair_gaussian(const LocalBasis& la, const LocalBasis& lb) {
  const Mat da = la.modes.delta();
  const Mat db = lb.modes.delta();
  const int n = la.modes.size();
  PairGaussian g;
  g.a = (da.inverse() + db.inverse()).inverse();
  g.a = 0.5 * (g.a + g.a.transpose()).eval();
  g.pref = std::sqrt(std::pow(2.0, n) * std::sqrt(da.determinant() * db.determinant()) / (da + db).determinant());
  return g;
}

// Lattice vectors j with (d0 + 2 pi j)^T A (d0 + 2 pi j) <= r2, by depth-first
// enumeration over the Cholesky factor of the quadratic form.
void enumerate_ellipsoid(const Mat& u, const Vec& c, int i, double rem, IVec& j, std::vector<IVec>& out,
                         std::size_t cap) {
  double s = 0.0;
  for (Eigen::Index k = i + 1; k < c.size(); ++k) s += u(i, k) * (j(k) - c(k));
  const double centre = c(i) - s / u(i, i);
  const double r = std::sqrt(std::max(rem, 0.0)) / u(i, i);
  const long lo = static_cast<long>(std::ceil(centre - r - 1e-12));
  const long hi = static_cast<long>(std::floor(centre + r + 1e-12));
  for (long ji = lo; ji <= hi; ++ji) {
    const double t = u(i, i) * (static_cast<double>(ji) - c(i)) + s;
    const double nrem = rem - t * t;
    if (nrem < -1e-12 * std::max(1.0, rem)) continue;
    j(i) = static_cast<int>(ji);
    if (i == 0) {
      out.push_back(j);
      if (out.size() > cap) throw Error(ErrorCode::NeighborExplosion, "neighbor enumeration exceeded cap");
    } else {
      enumerate_ellipsoid(u, c, i - 1, nrem, j, out, cap);
    }
  }
}

bool lex_less(const IVec& a, const IVec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return a(i) < b(i);
  return false;
}

bool lex_positive(const IVec& j) {
  for (Eigen::Index i = 0; i < j.size(); ++i)
    if (j(i) != 0) return j(i) > 0;
  return false;
}

// max_{k <= sigma} e^{-nu} nu^k / k!, non-increasing in nu.
double poisson_envelope(double nu, int sigma) {
  if (nu <= 0.0) return 1.0;
  double best = -std::numeric_limits<double>::infinity();
  double logterm = -nu;
  for (int k = 0; k <= sigma; ++k) {
    if (k > 0) logterm += std::log(nu) - std::log(static_cast<double>(k));
    best = std::max(best, logterm);
  }
  return std::exp(best);
}

}  // namespace

double excited_overlap(double overlap, double pref, int sigma_max) {
  if (overlap <= 0.0) return 0.0;
  const double nu = std::max(0.0, std::log(pref / overlap));
  return pref * poisson_envelope(nu, sigma_max);
}

double gs_overlap(const LocalBasis& a, const LocalBasis& b, const IVec& j) {
  const PairGaussian g = pair_gaussian(a, b);
  const Vec d = separation(a, b, j);
  return g.pref * std::exp(-0.5 * d.dot(g.a * d));
}

NeighborList select_neighbors(const std::vector<LocalBasis>& locals, const NeighborOptions& opts) {
  if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0))
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  if (locals.empty()) throw Error(ErrorCode::InvalidArgument, "no minima");
  const int n = locals.front().modes.size();
  const int m_count = static_cast<int>(locals.size());
  NeighborList out;
  for (int ml = 0; ml < m_count; ++ml) {
    for (int mr = ml; mr < m_count; ++mr) {
      const PairGaussian g = pair_gaussian(locals[static_cast<std::size_t>(ml)], locals[static_cast<std::size_t>(mr)]);
      std::vector<IVec> js;
      if (g.pref > opts.epsilon) {
        // Largest nu with pref * envelope(nu) >= epsilon; the overlap is pref * e^{-nu}.
        double lo = 0.0, hi = std::log(g.pref / opts.epsilon);
        while (g.pref * poisson_envelope(hi, opts.sigma_max) >= opts.epsilon) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (g.pref * poisson_envelope(mid, opts.sigma_max) >= opts.epsilon ? lo : hi) = mid;
        }
        const double r2 = 2.0 * hi;
        const Mat gram = kTwoPi * kTwoPi * g.a;
        Eigen::LLT<Mat> llt(gram);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "overlap form");
        const Mat u = llt.matrixU();
        const Vec c = -(locals[static_cast<std::size_t>(mr)].theta - locals[static_cast<std::size_t>(ml)].theta) / kTwoPi;
        IVec j = IVec::Zero(n);
        enumerate_ellipsoid(u, c, n - 1, r2, j, js, opts.max_entries);
      }
      bool has_zero = false;
      for (const IVec& j : js) has_zero = has_zero || j.isZero();
      if (!has_zero) js.push_back(IVec::Zero(n));
      for (const IVec& j : js) {
        const double ov = gs_overlap(locals[static_cast<std::size_t>(ml)], locals[static_cast<std::size_t>(mr)], j);
        if (excited_overlap(ov, g.pref, opts.sigma_max) < opts.epsilon && !j.isZero()) continue;
        out.push_back({ml, mr, j, ov});
        if (mr != ml) out.push_back({mr, ml, IVec(-j), ov});
      }
      if (out.size() > opts.max_entries)
        throw Error(ErrorCode::NeighborExplosion, std::to_string(out.size()) + " neighbor entries");
    }
  }
  std::sort(out.begin(), out.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
    if (a.m_left != b.m_left) return a.m_left < b.m_left;
    if (a.m_right != b.m_right) return a.m_right < b.m_right;
    return lex_less(a.j, b.j);
  });
  return out;
}

struct Assembler::Impl {
  const CircuitSpec& spec;
  std::vector<LocalBasis> locals;
  const fock::FockBasis& basis;
  TBSystem sys;
  std::set<std::tuple<int, int, std::vector<int>>> done;
  std::map<std::pair<int, int>, std::unique_ptr<fock::BlockEvaluator>> evaluators;

  Impl(const CircuitSpec& s, std::vector<LocalBasis> l, const fock::FockBasis& b)
      : spec(s), locals(std::move(l)), basis(b) {}

  fock::BlockEvaluator& evaluator(int ml, int mr) {
    auto& slot = evaluators[{ml, mr}];
    if (!slot) {
      const LocalBasis& ll = locals[static_cast<std::size_t>(ml)];
      const LocalBasis& lr = locals[static_cast<std::size_t>(mr)];
      const int n = spec.n_nodes;
      const bool same = (ll.modes.xi - lr.modes.xi).cwiseAbs().maxCoeff() == 0.0;
      slot = std::make_unique<fock::BlockEvaluator>(
          basis, ll.modes.xi, same ? fock::identity_squeeze(n) : fock::bogoliubov(ll.modes.xi, lr.modes.xi));
    }
    return *slot;
  }
};

Assembler::Assembler(const CircuitSpec& spec, std::vector<LocalBasis> locals, const fock::FockBasis& basis)
    : impl_(std::make_unique<Impl>(spec, std::move(locals), basis)) {
  spec.validate();
  const int n = spec.n_nodes;
  const int m_count = static_cast<int>(impl_->locals.size());
  if (basis.n_modes() != n) throw Error(ErrorCode::BlockMismatch, "basis mode count differs from node count");
  for (const LocalBasis& l : impl_->locals)
    if (l.modes.size() != n || l.theta.size() != n) throw Error(ErrorCode::BlockMismatch, "local basis size");
  const Eigen::Index d = basis.dim();
  TBSystem& sys = impl_->sys;
  sys.n_minima = m_count;
  sys.block_dim = d;
  sys.ng = spec.offset_charges.size() == n ? spec.offset_charges : Vec(Vec::Zero(n));
  sys.h = CMat::Zero(m_count * d, m_count * d);
  sys.s = CMat::Zero(m_count * d, m_count * d);
}

Assembler::~Assembler() = default;

std::size_t Assembler::add(const NeighborList& neighbors) {
  Impl& im = *impl_;
  TBSystem& sys = im.sys;
  const CircuitSpec& spec = im.spec;
  const int m_count = sys.n_minima;
  const Eigen::Index d = sys.block_dim;
  const cplx i1(0.0, 1.0);
  std::size_t added = 0;
  for (const NeighborEntry& e : neighbors) {
    if (e.m_left < 0 || e.m_left >= m_count || e.m_right < 0 || e.m_right >= m_count)
      throw Error(ErrorCode::BlockMismatch, "neighbor entry refers to unknown minimum");
    if (e.j.size() != spec.n_nodes) throw Error(ErrorCode::BlockMismatch, "lattice vector size");
    // Only the canonical half is evaluated; its adjoint supplies (m, m', -j).
    const bool canonical = e.m_left < e.m_right || (e.m_left == e.m_right && !lex_positive(IVec(-e.j)));
    if (!canonical) continue;
    auto key = std::make_tuple(e.m_left, e.m_right, std::vector<int>(e.j.data(), e.j.data() + e.j.size()));
    if (!im.done.insert(std::move(key)).second) continue;
    ++added;

    const LocalBasis& ll = im.locals[static_cast<std::size_t>(e.m_left)];
    const LocalBasis& lr = im.locals[static_cast<std::size_t>(e.m_right)];
    fock::BlockEvaluator& ev = im.evaluator(e.m_left, e.m_right);
    const Vec delta = separation(ll, lr, e.j);
    auto [hb, sb] = ev.kinetic_and_overlap(delta, spec.ec_matrix);
    hb += spec.energy_shift * sb;
    for (const CosineTerm& t : spec.cosine_terms) {
      const Vec w = t.weights.cast<double>();
      const double alpha = w.dot(ll.theta) + t.phase_offset;
      hb -= (0.5 * t.amplitude) * (std::exp(i1 * alpha) * ev.exp_i_phi(delta, w) +
                                   std::exp(-i1 * alpha) * ev.exp_i_phi(delta, -w));
    }
    const cplx phase = std::exp(-i1 * sys.ng.dot(delta));
    hb *= phase;
    sb *= phase;
    const Eigen::Index r0 = e.m_left * d;
    const Eigen::Index c0 = e.m_right * d;
    sys.h.block(r0, c0, d, d) += hb;
    sys.s.block(r0, c0, d, d) += sb;
    if (!(e.m_left == e.m_right && e.j.isZero())) {
      sys.h.block(c0, r0, d, d) += hb.adjoint();
      sys.s.block(c0, r0, d, d) += sb.adjoint();
    }
  }
  return added;
}

TBSystem Assembler::system() const {
  TBSystem out = impl_->sys;
  out.h = (0.5 * (out.h + out.h.adjoint())).eval();
  out.s = (0.5 * (out.s + out.s.adjoint())).eval();
  return out;
}

TBSystem assemble(const CircuitSpec& spec, const std::vector<LocalBasis>& locals,
                  const fock::FockBasis& basis, const NeighborList& neighbors) {
  Assembler a(spec, locals, basis);
  a.add(neighbors);
  return a.system();
}

LowdinResult lowdin_solve(const TBSystem& sys, double delta_min, int k) {
  if (sys.h.rows() != sys.s.rows() || sys.h.rows() == 0) throw Error(ErrorCode::BlockMismatch, "H and S sizes");
  const CMat s = 0.5 * (sys.s + sys.s.adjoint());
  const CMat h = 0.5 * (sys.h + sys.h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(s);
  const Vec& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) throw Error(ErrorCode::AllDeflated, "overlap matrix has no positive eigenvalue");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) >= delta_min * top) keep.push_back(i);
  if (keep.empty()) throw Error(ErrorCode::AllDeflated, "every overlap eigenvalue is below delta_min");

  CMat x(s.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    x.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(ev(keep[c]));
  CMat hp = x.adjoint() * h * x;
  hp = (0.5 * (hp + hp.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<CMat> hs(hp, Eigen::EigenvaluesOnly);

  LowdinResult r;
  r.retained = static_cast<Eigen::Index>(keep.size());
  const Eigen::Index count = std::min<Eigen::Index>(k, r.retained);
  r.energies = hs.eigenvalues().head(count);
  r.overlap_condition = top / ev(keep.front());
  return r;
}

AnharmonicResult anharmonic_optimize(const CircuitSpec& spec, const LocalBasis& local, const NeighborOptions& nopts) {
  const int n = spec.n_nodes;
  const fock::FockBasis ground(n, 0);
  auto quotient = [&](const Vec& lambda) {
    LocalBasis l{local.theta, rescale(local.modes, lambda)};
    const std::vector<LocalBasis> one{l};
    const TBSystem sys = assemble(spec, one, ground, select_neighbors(one, nopts));
    const double norm = sys.s(0, 0).real();
    if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
    return sys.h(0, 0).real() / norm;
  };

  NelderMeadOptions nm;
  nm.initial_step = 0.1;
  nm.f_tol = 1e-6;
  AnharmonicResult res;
  const double base = quotient(Vec::Ones(n));
  try {
    const NelderMeadResult r = nelder_mead([&](const Vec& lg) { return quotient(lg.array().exp().matrix()); },
                                           Vec::Zero(n), nm);
    res.evaluations = r.evaluations;
    if (r.converged && std::isfinite(r.value) && r.value <= base) {
      res.lambda = r.x.array().exp().matrix();
      res.energy = r.value;
      res.converged = true;
      return res;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NeighborExplosion) throw;
  }
  res.lambda = Vec::Ones(n);
  res.energy = base;
  res.converged = false;
  return res;
}

Mat localization_ratios(const std::vector<LocalBasis>& locals) {
  const int m_count = static_cast<int>(locals.size());
  if (m_count == 0) throw Error(ErrorCode::InvalidArgument, "no minima");
  const int n = locals.front().modes.size();
  long long images = 1;
  for (int i = 0; i < n; ++i) images *= 3;
  Mat r(m_count, m_count);
  for (int a = 0; a < m_count; ++a) {
    for (int b = a; b < m_count; ++b) {
      const LocalBasis& la = locals[static_cast<std::size_t>(a)];
      const LocalBasis& lb = locals[static_cast<std::size_t>(b)];
      const Mat da = la.modes.delta();
      const Mat db = lb.modes.delta();
      double best_dist = std::numeric_limits<double>::infinity();
      double best_r = std::numeric_limits<double>::infinity();
      for (long long code = 0; code < images; ++code) {
        IVec j(n);
        long long c = code;
        for (int i = 0; i < n; ++i) {
          j(i) = static_cast<int>(c % 3) - 1;
          c /= 3;
        }
        if (a == b && j.isZero()) continue;
        // Minimum-image relative separation, reduced into the central cell first.
        Vec d = lb.theta - la.theta;
        for (int i = 0; i < n; ++i) d(i) = std::remainder(d(i), kTwoPi);
        d += kTwoPi * j.cast<double>();
        const double dist = d.norm();
        // Conservative choice over the two widths: the broader state sets l.
        const double ri = 0.5 * std::sqrt(std::min(d.dot(da * d), d.dot(db * d)));
        if (dist < best_dist * (1.0 - 1e-9)) {
          best_dist = dist;
          best_r = ri;
        } else if (dist <= best_dist * (1.0 + 1e-9)) {
          best_r = std::min(best_r, ri);
        }
      }
      r(a, b) = r(b, a) = best_r;
    }
  }
  return r;
}

long long count_nnz(const CMat& m, double rel_threshold) {
  if (m.size() == 0) return 0;
  const double thr = rel_threshold * m.cwiseAbs().maxCoeff();
  long long count = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > thr) ++count;
  return count;
}

long long count_nnz(const CSpMat& m) { return static_cast<long long>(m.nonZeros()); }

std::vector<LocalBasis> scheme_bases(const CircuitSpec& spec, const std::vector<Minimum>& minima, Scheme scheme,
                                     const NeighborOptions& nopts, AnharmonicResult* lambda_out) {
  if (minima.empty()) throw Error(ErrorCode::NoMinimaFound, "empty minima list");
  std::vector<ModeData> raw;
  for (const Minimum& m : minima) raw.push_back(normal_modes(spec.ec_matrix, m.hessian));

  AnharmonicResult ac;
  ac.lambda = Vec::Ones(spec.n_nodes);
  ac.converged = true;
  ModeData first = raw.front();
  if (scheme == Scheme::IPAC || scheme == Scheme::PAC) {
    NeighborOptions opt = nopts;
    opt.epsilon = std::min(nopts.epsilon, 1e-4);
    ac = anharmonic_optimize(spec, LocalBasis{minima.front().theta, raw.front()}, opt);
    first = rescale(raw.front(), ac.lambda);
  }
  if (lambda_out) *lambda_out = ac;

  std::vector<LocalBasis> out;
  for (std::size_t m = 0; m < minima.size(); ++m) {
    const bool shared = scheme == Scheme::IP || scheme == Scheme::IPAC || m == 0;
    out.push_back(LocalBasis{minima[m].theta, shared ? first : raw[m]});
  }
  return out;
}

TBResult solve_tight_binding(const CircuitSpec& spec, const TBOptions& opts) {
  return solve_tight_binding(spec, find_minima(spec, opts.search), opts);
}

TBResult solve_tight_binding(const CircuitSpec& spec, const std::vector<Minimum>& minima, const TBOptions& opts) {
  spec.validate();
  if (opts.sigma_max < 0) throw Error(ErrorCode::InvalidArgument, "sigma_max must be non-negative");
  if (opts.levels < 1) throw Error(ErrorCode::InvalidArgument, "levels must be positive");
  const int m_count = static_cast<int>(minima.size());
  const fock::FockBasis basis(spec.n_nodes, opts.sigma_max, std::max<Eigen::Index>(1, opts.max_dim / std::max(1, m_count)));

  NeighborOptions nopts;
  nopts.epsilon = opts.epsilon;
  nopts.max_entries = opts.max_neighbors;
  AnharmonicResult ac;
  const std::vector<LocalBasis> locals = scheme_bases(spec, minima, opts.scheme, nopts, &ac);
  nopts.sigma_max = opts.sigma_max;

  TBResult res;
  res.n_minima = m_count;
  res.lambda = ac.lambda;
  res.optimizer_converged = ac.converged;
  res.total_dim = m_count * basis.dim();

  // Halve epsilon until a refinement that adds neighbors moves no level by more
  // than adapt_tol. Refinements that add nothing are skipped without a solve.
  Assembler assembler(spec, locals, basis);
  double eps = opts.epsilon;
  std::size_t prev_size = 0;
  bool have = false;
  int solves = 0;
  int calm = 0;
  while (true) {
    nopts.epsilon = eps;
    const NeighborList nl = select_neighbors(locals, nopts);
    if (!have || nl.size() != prev_size) {
      assembler.add(nl);
      const TBSystem sys = assembler.system();
      const LowdinResult lr = lowdin_solve(sys, opts.delta_min, opts.levels);
      const bool settled = have && lr.energies.size() == res.energies.size() &&
                           (lr.energies - res.energies).cwiseAbs().maxCoeff() < opts.adapt_tol;
      calm = settled ? calm + 1 : 0;
      res.energies = lr.energies;
      res.retained_dim = lr.retained;
      res.overlap_condition = lr.overlap_condition;
      res.n_h = count_nnz(sys.h);
      res.n_neighbors = nl.size();
      res.epsilon_used = eps;
      ++solves;
      if (!opts.adaptive_epsilon || calm >= opts.settle_count || solves > opts.max_refinements) break;
      have = true;
      prev_size = nl.size();
    }
    eps *= 0.5;
    if (eps < opts.epsilon_floor) break;
  }
  return res;
}

}  // namespace vtb
