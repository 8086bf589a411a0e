#pragma once

#include <vector>

#include "vtb/common.hpp"

namespace vtb {

// One junction-like contribution -amplitude * cos(weights . phi + phase_offset).
struct CosineTerm {
  double amplitude = 0.0;  // GHz
  IVec weights;
  double phase_offset = 0.0;  // rad
};

// Hamiltonian of a purely periodic circuit (energies in GHz, i.e. E/h):
//   H = sum_ij (n_i - ng_i) 4 Ec_ij (n_j - ng_j) + energy_shift - sum_t E_t cos(w_t . phi + p_t)
struct CircuitSpec {
  int n_nodes = 0;
  Mat ec_matrix;
  std::vector<CosineTerm> cosine_terms;
  Vec offset_charges;
  double energy_shift = 0.0;

  // Throws Error(InvalidArgument / NotPositiveDefinite) when an invariant is violated.
  void validate() const;
};

double potential(const CircuitSpec& spec, const Vec& phi);
Vec potential_gradient(const CircuitSpec& spec, const Vec& phi);
Mat potential_hessian(const CircuitSpec& spec, const Vec& phi);

// Three-junction flux qubit. Charging energies are e^2/2C for the junction and
// ground capacitances; flux_frac is Phi_ext/Phi_0.
CircuitSpec flux_qubit_spec(double EJ, double ECJ, double ECg, double alpha, double flux_frac,
                            double ng1 = 0.0, double ng2 = 0.0);

// Current-mirror circuit with n_big big capacitors, written in the 2*n_big-1
// junction phase variables. See README for the assumed capacitance network.
CircuitSpec current_mirror_spec(int n_big, double ECB, double ECJ, double ECg, double EJ,
                                double flux_frac, const Vec& ng = Vec());

// Capacitance matrix (units of e^2/(2 GHz)) of the current-mirror island network in
// ring order: ground capacitors on every island, junction capacitors between
// ring neighbours and big capacitors between opposite islands.
Mat current_mirror_island_capacitance(int n_big, double ECB, double ECJ, double ECg);

}  // namespace vtb
