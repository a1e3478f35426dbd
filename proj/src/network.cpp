#include "gridid/network.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridid/io.hpp"

namespace gridid {

using nlohmann::json;

int NetworkModel::slack_index() const {
  for (int i = 0; i < n(); ++i)
    if (buses[static_cast<size_t>(i)].kind == BusKind::Slack) return i;
  throw ConfigError("network has no slack bus");
}

Vec NetworkModel::nominal_p() const {
  Vec p(n());
  for (int i = 0; i < n(); ++i)
    p[i] = -buses[static_cast<size_t>(i)].p_mw / base_mva;
  return p;
}

Vec NetworkModel::nominal_q() const {
  Vec q(n());
  for (int i = 0; i < n(); ++i)
    q[i] = -buses[static_cast<size_t>(i)].q_mvar / base_mva;
  return q;
}

namespace {

void validate_network(const NetworkModel& net) {
  const int n = net.n();
  if (n < 2) throw ConfigError("network needs at least 2 buses");
  int slack_count = 0;
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses[static_cast<size_t>(i)];
    if (b.id != i + 1)
      throw ConfigError("bus ids must be contiguous 1..n; got id " +
                        std::to_string(b.id) + " at position " +
                        std::to_string(i + 1));
    if (b.kind == BusKind::Slack) {
      ++slack_count;
      if (b.p_mw != 0.0 || b.q_mvar != 0.0)
        throw ConfigError("slack bus must have zero nominal load");
    }
  }
  if (slack_count != 1)
    throw ConfigError("expected exactly one slack bus, got " +
                      std::to_string(slack_count));

  std::set<std::pair<int, int>> seen;
  for (const Branch& br : net.branches) {
    if (br.from < 1 || br.from > n || br.to < 1 || br.to > n)
      throw ConfigError("branch endpoint out of range: " +
                        std::to_string(br.from) + "-" + std::to_string(br.to));
    if (br.from == br.to)
      throw ConfigError("self-loop branch at bus " + std::to_string(br.from));
    auto key = std::minmax(br.from, br.to);
    if (!seen.insert(key).second)
      throw ConfigError("duplicate branch " + std::to_string(key.first) + "-" +
                        std::to_string(key.second));
    if (br.r <= 0.0 && br.x == 0.0)
      throw ConfigError("branch " + std::to_string(br.from) + "-" +
                        std::to_string(br.to) +
                        " has non-positive r and zero x");
  }

  // Connectivity over the branch graph.
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (const Branch& br : net.branches) {
    adj[static_cast<size_t>(br.from - 1)].push_back(br.to - 1);
    adj[static_cast<size_t>(br.to - 1)].push_back(br.from - 1);
  }
  std::vector<bool> vis(static_cast<size_t>(n), false);
  std::vector<int> stack{0};
  vis[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<size_t>(u)])
      if (!vis[static_cast<size_t>(w)]) {
        vis[static_cast<size_t>(w)] = true;
        ++reached;
        stack.push_back(w);
      }
  }
  if (reached != n) throw ConfigError("branch graph is not connected");
}

}  // namespace

AdmittanceMatrix build_admittance(const NetworkModel& net) {
  validate_network(net);
  const int n = net.n();
  AdmittanceMatrix y;
  y.g = Mat::Zero(n, n);
  y.b = Mat::Zero(n, n);
  for (const Branch& br : net.branches) {
    const int h = br.from - 1, k = br.to - 1;
    const cx adm = 1.0 / cx(br.r, br.x);
    if (adm.real() <= 0.0)
      throw ConfigError("branch " + std::to_string(br.from) + "-" +
                        std::to_string(br.to) +
                        " yields non-positive conductance");
    // Assign both triangles from the same value: symmetry by construction.
    y.g(h, k) = y.g(k, h) = -adm.real();
    y.b(h, k) = y.b(k, h) = -adm.imag();
    y.g(h, h) += adm.real();
    y.g(k, k) += adm.real();
    y.b(h, h) += adm.imag();
    y.b(k, k) += adm.imag();
  }
  for (int h = 0; h < n; ++h) {
    y.g(h, h) += net.buses[static_cast<size_t>(h)].shunt_g;
    y.b(h, h) += net.buses[static_cast<size_t>(h)].shunt_b;
  }
  return y;
}

NetworkModel load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("network JSON parse error in " + path + ": " + e.what());
  }
  NetworkModel net;
  try {
    net.base_mva = j.at("base_mva").get<double>();
    net.base_kv = j.at("base_kv").get<double>();
    if (net.base_mva <= 0 || net.base_kv <= 0)
      throw ConfigError("base_mva and base_kv must be positive");
    const double z_base = net.base_kv * net.base_kv / net.base_mva;
    for (const auto& jb : j.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      const std::string kind = jb.at("kind").get<std::string>();
      if (kind == "slack")
        b.kind = BusKind::Slack;
      else if (kind == "pq")
        b.kind = BusKind::PQ;
      else
        throw ConfigError("unknown bus kind: " + kind);
      b.p_mw = jb.at("p_mw").get<double>();
      b.q_mvar = jb.at("q_mvar").get<double>();
      b.shunt_g = jb.value("shunt_g_pu", 0.0);
      b.shunt_b = jb.value("shunt_b_pu", 0.0);
      net.buses.push_back(b);
    }
    for (const auto& jb : j.at("branches")) {
      Branch br;
      br.from = jb.at("from").get<int>();
      br.to = jb.at("to").get<int>();
      br.r = jb.at("r_ohm").get<double>() / z_base;
      br.x = jb.at("x_ohm").get<double>() / z_base;
      net.branches.push_back(br);
    }
  } catch (const json::exception& e) {
    throw ConfigError("network JSON structure error in " + path + ": " +
                      e.what());
  }
  validate_network(net);
  return net;
}

void save_network(const NetworkModel& net, const std::string& path) {
  const double z_base = net.base_kv * net.base_kv / net.base_mva;
  json j;
  j["base_mva"] = net.base_mva;
  j["base_kv"] = net.base_kv;
  j["buses"] = json::array();
  for (const Bus& b : net.buses) {
    j["buses"].push_back({{"id", b.id},
                          {"kind", b.kind == BusKind::Slack ? "slack" : "pq"},
                          {"p_mw", b.p_mw},
                          {"q_mvar", b.q_mvar},
                          {"shunt_g_pu", b.shunt_g},
                          {"shunt_b_pu", b.shunt_b}});
  }
  j["branches"] = json::array();
  for (const Branch& br : net.branches) {
    j["branches"].push_back({{"from", br.from},
                             {"to", br.to},
                             {"r_ohm", br.r * z_base},
                             {"x_ohm", br.x * z_base}});
  }
  write_text_file(path, j.dump(2) + "\n");
}

void save_matrix_csv(const CMat& y, const std::string& path) {
  std::ostringstream out;
  out << "h,k,g_pu,b_pu\n";
  for (int h = 0; h < y.rows(); ++h)
    for (int k = h; k < y.cols(); ++k)
      out << (h + 1) << ',' << (k + 1) << ',' << fmt_g17(y(h, k).real()) << ','
          << fmt_g17(y(h, k).imag()) << '\n';
  write_text_file(path, out.str());
}

CMat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("h,k,", 0) != 0)
    throw IoError("bad matrix CSV header in " + path);
  std::vector<std::tuple<int, int, double, double>> rows;
  int nmax = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int h, k;
    double g, b;
    char c1, c2, c3;
    if (!(ss >> h >> c1 >> k >> c2 >> g >> c3 >> b))
      throw IoError("bad matrix CSV row at " + path + ":" +
                    std::to_string(lineno));
    rows.emplace_back(h, k, g, b);
    nmax = std::max({nmax, h, k});
  }
  CMat y = CMat::Zero(nmax, nmax);
  for (auto& [h, k, g, b] : rows) {
    y(h - 1, k - 1) = cx(g, b);
    y(k - 1, h - 1) = cx(g, b);
  }
  return y;
}

}  // namespace gridid
