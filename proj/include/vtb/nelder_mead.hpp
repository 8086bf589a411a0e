#pragma once

#include <functional>

#include "vtb/common.hpp"

namespace vtb {

struct NelderMeadOptions {
  double initial_step = 0.1;
  double f_tol = 1e-6;  // stop when the simplex values span less than this
  int max_evaluations = 2000;
};

struct NelderMeadResult {
  Vec x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Downhill simplex with the standard reflection/expansion/contraction/shrink
// coefficients (1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                             const NelderMeadOptions& opts = {});

}  // namespace vtb
