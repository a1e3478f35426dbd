#pragma once

#include <string>
#include <vector>

#include "gridid/types.hpp"

namespace gridid {

enum class BusKind { Slack, PQ };

struct Bus {
  int id = 0;  // 1-based, contiguous
  BusKind kind = BusKind::PQ;
  double p_mw = 0.0;   // nominal load, positive = consumption
  double q_mvar = 0.0;
  double shunt_g = 0.0;  // pu, bus-to-neutral
  double shunt_b = 0.0;
};

struct Branch {
  int from = 0;  // 1-based bus ids
  int to = 0;
  double r = 0.0;  // pu (converted from ohms at load time)
  double x = 0.0;
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  double base_mva = 0.0;
  double base_kv = 0.0;

  int n() const { return static_cast<int>(buses.size()); }
  int slack_index() const;  // 0-based
  // Nominal injections in pu; loads enter negative (consumption).
  Vec nominal_p() const;
  Vec nominal_q() const;
};

// Y = G + jB. Line y = 1/(r+jx) gives g > 0, b < 0; off-diagonals are -y,
// diagonals sum incident line admittances plus the shunt.
struct AdmittanceMatrix {
  Mat g, b;
  int n() const { return static_cast<int>(g.rows()); }
  CMat complex_matrix() const {
    return g.cast<cx>() + cx(0.0, 1.0) * b.cast<cx>();
  }
};

AdmittanceMatrix build_admittance(const NetworkModel& net);

NetworkModel load_network(const std::string& path);
void save_network(const NetworkModel& net, const std::string& path);

// Symmetric storage: `h,k,g_pu,b_pu` rows for h <= k, 1-based indices.
void save_matrix_csv(const CMat& y, const std::string& path);
CMat load_matrix_csv(const std::string& path);

}  // namespace gridid
