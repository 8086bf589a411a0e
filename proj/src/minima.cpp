#include "vtb/minima.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace vtb {

Vec canonicalize(const Vec& theta) {
  Vec out(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double x = theta(i) - kTwoPi * std::floor((theta(i) + kPi) / kTwoPi);
    if (x >= kPi) x -= kTwoPi;
    if (x < -kPi) x += kTwoPi;
    out(i) = x;
  }
  return out;
}

namespace {

struct Candidate {
  Vec theta;
  double min_eig;
};

double wrapped_distance(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double x = std::remainder(a(i) - b(i), kTwoPi);
    d = std::max(d, std::abs(x));
  }
  return d;
}

// Saddle-free Newton iteration with a trust radius. Stationary points with a
// negative curvature direction are escaped along that direction.
std::optional<Candidate> descend(const CircuitSpec& spec, Vec x, const SearchOptions& opts) {
  double radius = 0.5;
  double value = potential(spec, x);
  int escapes = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vec g = potential_gradient(spec, x);
    const Mat h = potential_hessian(spec, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const Vec& lam = es.eigenvalues();
    const Mat& vecs = es.eigenvectors();
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());

    if (g.norm() < opts.grad_tol) {
      if (lam(0) > opts.hess_floor) return Candidate{x, lam(0)};
      if (lam(0) > -opts.hess_floor) {
        // Flat stationary point: probe the null directions and their pairwise
        // combinations for a higher-order descent before calling it a minimum.
        std::vector<Vec> dirs;
        for (Eigen::Index i = 0; i < lam.size() && lam(i) <= opts.hess_floor; ++i) dirs.push_back(vecs.col(i));
        const std::size_t nd = dirs.size();
        for (std::size_t i = 0; i < nd; ++i)
          for (std::size_t j = i + 1; j < nd; ++j) {
            dirs.push_back((dirs[i] + dirs[j]).normalized());
            dirs.push_back((dirs[i] - dirs[j]).normalized());
          }
        std::optional<Vec> better;
        for (const Vec& d : dirs)
          for (double s : {0.05, -0.05})
            if (!better && potential(spec, x + s * d) < value - 1e-12) better = x + s * d;
        if (!better) return Candidate{x, lam(0)};
        if (++escapes > 8) return std::nullopt;
        x = *better;
        value = potential(spec, x);
        radius = 0.5;
        continue;
      }
      if (++escapes > 8) return std::nullopt;
      Vec dir = vecs.col(0);
      Eigen::Index imax;
      dir.cwiseAbs().maxCoeff(&imax);
      if (dir(imax) < 0) dir = -dir;
      x += 0.3 * dir;
      value = potential(spec, x);
      radius = 0.5;
      continue;
    }

    Vec step = Vec::Zero(x.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double curv = std::max(std::abs(lam(i)), 1e-8 * scale);
      step -= vecs.col(i) * (vecs.col(i).dot(g) / curv);
    }
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      Vec trial = step;
      if (trial.norm() > radius) trial *= radius / trial.norm();
      const Vec xn = x + trial;
      const double vn = potential(spec, xn);
      if (vn <= value) {
        const bool full = trial.norm() >= step.norm() * (1 - 1e-12);
        x = xn;
        value = vn;
        if (full) radius = std::min(2.0 * radius, 2.0);
        accepted = true;
        break;
      }
      radius *= 0.25;
    }
    if (!accepted) {
      // No decrease is representable any more; accept only if we are already stationary.
      const Vec gn = potential_gradient(spec, x);
      if (gn.norm() < 1e3 * opts.grad_tol) {
        Eigen::SelfAdjointEigenSolver<Mat> fin(potential_hessian(spec, x), Eigen::EigenvaluesOnly);
        if (fin.eigenvalues()(0) > -opts.hess_floor) return Candidate{x, fin.eigenvalues()(0)};
      }
      return std::nullopt;
    }
    if (std::abs(x.maxCoeff()) > 1e3 || std::abs(x.minCoeff()) > 1e3) return std::nullopt;
  }
  return std::nullopt;
}

std::vector<Vec> make_seeds(int n, const SearchOptions& opts) {
  std::vector<Vec> seeds;
  const int g = opts.grid_points > 0 ? opts.grid_points : (n <= 4 ? 6 : 3);

  // Regular grid, offset by half a cell so seeds avoid the symmetric points.
  long long total = 1;
  for (int i = 0; i < n; ++i) total *= g;
  for (long long code = 0; code < total; ++code) {
    Vec s(n);
    long long c = code;
    for (int i = 0; i < n; ++i) {
      s(i) = -kPi + (static_cast<double>(c % g) + 0.5) * kTwoPi / g;
      c /= g;
    }
    seeds.push_back(s);
  }

  // High-symmetry points: every combination for small N, uniform vectors otherwise.
  const double sym[] = {0.0, kTwoPi / 3.0, -kTwoPi / 3.0, -kPi};
  long long combos = 1;
  for (int i = 0; i < n && combos <= 4096; ++i) combos *= 4;
  if (combos <= 4096) {
    for (long long code = 0; code < combos; ++code) {
      Vec s(n);
      long long c = code;
      for (int i = 0; i < n; ++i) {
        s(i) = sym[c % 4];
        c /= 4;
      }
      seeds.push_back(s);
    }
  } else {
    for (double v : sym) seeds.push_back(Vec::Constant(n, v));
  }

  // Uniform line phi_i = c, which holds the vortex-like minima of ring circuits.
  const int line = 4 * n + 4;
  for (int k = 0; k < line; ++k) seeds.push_back(Vec::Constant(n, -kPi + (k + 0.5) * kTwoPi / line));

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-kPi, kPi);
  const int nrand = opts.random_seeds >= 0 ? opts.random_seeds : 32 * n;
  for (int k = 0; k < nrand; ++k) {
    Vec s(n);
    for (int i = 0; i < n; ++i) s(i) = uni(rng);
    seeds.push_back(s);
  }
  return seeds;
}

}  // namespace

std::vector<Minimum> find_minima(const CircuitSpec& spec, const SearchOptions& opts) {
  spec.validate();
  const int n = spec.n_nodes;
  std::vector<Vec> found;
  bool any_converged = false;
  for (const Vec& seed : make_seeds(n, opts)) {
    auto cand = descend(spec, seed, opts);
    if (!cand) continue;
    any_converged = true;
    const Vec theta = canonicalize(cand->theta);
    if (cand->min_eig <= opts.hess_floor)
      throw Error(ErrorCode::DegenerateHessian,
                  "stationary point with Hessian eigenvalue " + std::to_string(cand->min_eig));
    bool dup = false;
    for (const Vec& f : found) {
      if (wrapped_distance(f, theta) < std::max(opts.dedup_tol, 1e3 * opts.grad_tol)) {
        dup = true;
        break;
      }
    }
    if (!dup) found.push_back(theta);
  }
  if (!any_converged || found.empty())
    throw Error(ErrorCode::NoMinimaFound, "no local descent converged");

  std::vector<Minimum> out;
  for (const Vec& t : found) {
    Minimum m;
    m.theta = t;
    m.value = potential(spec, t);
    m.hessian = potential_hessian(spec, t);
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const Minimum& a, const Minimum& b) {
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(a.value), std::abs(b.value)));
    if (std::abs(a.value - b.value) > tol) return a.value < b.value;
    for (Eigen::Index i = 0; i < a.theta.size(); ++i) {
      if (std::abs(a.theta(i) - b.theta(i)) > 1e-9) return a.theta(i) < b.theta(i);
    }
    return false;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<int>(i);
  return out;
}

}  // namespace vtb
