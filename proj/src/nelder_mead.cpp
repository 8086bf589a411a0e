#include "vtb/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace vtb {

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                             const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  std::vector<Vec> pts;
  std::vector<double> vals;
  NelderMeadResult res;
  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  pts.push_back(x0);
  vals.push_back(eval(x0));
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec x = x0;
    x(i) += opts.initial_step;
    pts.push_back(x);
    vals.push_back(eval(x));
  }

  std::vector<std::size_t> order(pts.size());
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) < opts.f_tol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opts.max_evaluations) break;

    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
    centroid /= static_cast<double>(n);

    const Vec xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Vec xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

}  // namespace vtb
