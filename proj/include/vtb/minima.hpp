#pragma once

#include <cstdint>
#include <vector>

#include "vtb/circuit.hpp"

namespace vtb {

struct Minimum {
  int index = 0;
  Vec theta;     // location in the central cell [-pi, pi)^N
  double value;  // V(theta), GHz
  Mat hessian;   // GHz
};

struct SearchOptions {
  int grid_points = 0;  // per axis; 0 selects 6 for N <= 4 and 3 otherwise
  int random_seeds = -1;  // -1 selects 32 * N
  std::uint64_t seed = 20240611;
  double grad_tol = 1e-9;
  double dedup_tol = 1e-6;
  double hess_floor = 1e-8;
  int max_iterations = 500;
};

// Componentwise wrap into [-pi, pi).
Vec canonicalize(const Vec& theta);

// All distinct local minima in the central unit cell, sorted by value and then
// lexicographically by theta; index 0 is a global minimum.
std::vector<Minimum> find_minima(const CircuitSpec& spec, const SearchOptions& opts = {});

}  // namespace vtb
