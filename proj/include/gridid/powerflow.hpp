#pragma once

#include <utility>

#include "gridid/network.hpp"
#include "gridid/types.hpp"

namespace gridid {

struct VoltageState {
  Vec v;      // magnitude pu
  Vec theta;  // radians, slack = 0
};

struct Injections {
  Vec p;  // pu
  Vec q;
};

// Newton-Raphson in polar coordinates, flat start, tolerance 1e-10 on the
// power mismatch, max 50 iterations. All non-slack buses are PQ.
struct PowerflowResult {
  VoltageState state;
  int iterations = 0;
};

PowerflowResult solve_powerflow(const AdmittanceMatrix& y, const Injections& inj,
                                double slack_v, int slack = 0);

// p + jq = diag(V) conj(Y V), V = v e^{j theta}.
Injections exact_powers(const AdmittanceMatrix& y, const VoltageState& st);

// First-order model in the angle differences:
//   p_h = v_h sum_k v_k G_hk + v_h sum_{k!=h} v_k B_hk (th_h - th_k)
//   q_h = -v_h sum_k v_k B_hk + v_h sum_{k!=h} v_k G_hk (th_h - th_k)
Injections linearized_powers(const AdmittanceMatrix& y, const VoltageState& st);

// Same expansion with the angle term grouped as (v_h th_h - v_k th_k).
Injections adapted_constraint_powers(const AdmittanceMatrix& y,
                                     const VoltageState& st);

// Absolute elementwise difference of the two models, in closed form:
//   |dp_h| = |v_h th_h sum_{k!=h} B_hk (v_h - v_k)|, dq analogous with G.
std::pair<Vec, Vec> constraint_difference(const AdmittanceMatrix& y,
                                          const VoltageState& st);

}  // namespace gridid
