#include "gridid/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gridid {

namespace {

constexpr char kMeasHeader[] = "t,bus,v_mag_pu,theta_rad,p_pu,q_pu";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, const std::string& path, int lineno) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + s +
                  "'");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

void write_rows(std::ofstream& f, const std::string& path, const Mat& v,
                const Mat& theta, const Mat& p, const Mat& q) {
  f << kMeasHeader << '\n';
  const int N = static_cast<int>(v.rows()), n = static_cast<int>(v.cols());
  for (int t = 0; t < N; ++t)
    for (int h = 0; h < n; ++h) {
      f << t << ',' << (h + 1) << ',' << fmt_g17(v(t, h)) << ',';
      if (theta.size() > 0) f << fmt_g17(theta(t, h));
      f << ',' << fmt_g17(p(t, h)) << ',' << fmt_g17(q(t, h)) << '\n';
    }
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_measurements_csv(const MeasurementSet& ms, const std::string& path) {
  if (ms.centered)
    throw ConfigError("refusing to save centered data as measurements");
  auto f = open_out(path);
  write_rows(f, path, ms.v_mag, ms.theta, ms.p, ms.q);
}

void save_states_csv(const TrueStates& truth, const std::string& path) {
  const int N = truth.N();
  if (N == 0) throw ConfigError("empty state set");
  const int n = static_cast<int>(truth.states[0].v.size());
  Mat v(N, n), th(N, n), p(N, n), q(N, n);
  for (int t = 0; t < N; ++t) {
    v.row(t) = truth.states[static_cast<size_t>(t)].v.transpose();
    th.row(t) = truth.states[static_cast<size_t>(t)].theta.transpose();
    p.row(t) = truth.injections[static_cast<size_t>(t)].p.transpose();
    q.row(t) = truth.injections[static_cast<size_t>(t)].q.transpose();
  }
  auto f = open_out(path);
  write_rows(f, path, v, th, p, q);
}

MeasurementSet load_measurements_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMeasHeader)
    throw IoError(path + ": unexpected header '" + line + "'");

  struct Row {
    int t, bus;
    double v, th, p, q;
    bool has_theta;
  };
  std::vector<Row> rows;
  int max_t = -1, max_bus = 0, lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto parts = split_csv(line);
    if (parts.size() != 6)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 6 fields");
    Row r;
    r.t = static_cast<int>(parse_num(parts[0], path, lineno));
    r.bus = static_cast<int>(parse_num(parts[1], path, lineno));
    r.v = parse_num(parts[2], path, lineno);
    r.has_theta = !parts[3].empty();
    r.th = r.has_theta ? parse_num(parts[3], path, lineno) : 0.0;
    r.p = parse_num(parts[4], path, lineno);
    r.q = parse_num(parts[5], path, lineno);
    if (r.t < 0 || r.bus < 1)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": bad sample index or bus id");
    max_t = std::max(max_t, r.t);
    max_bus = std::max(max_bus, r.bus);
    rows.push_back(r);
  }
  if (rows.empty()) throw IoError(path + ": no data rows");
  const bool with_phase = rows.front().has_theta;
  const int N = max_t + 1, n = max_bus;
  if (static_cast<long long>(rows.size()) !=
      static_cast<long long>(N) * static_cast<long long>(n))
    throw IoError(path + ": incomplete (t, bus) grid");

  MeasurementSet ms;
  ms.with_phase = with_phase;
  ms.v_mag.resize(N, n);
  ms.p.resize(N, n);
  ms.q.resize(N, n);
  if (with_phase) ms.theta.resize(N, n);
  Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> seen(N, n);
  seen.setZero();
  for (const Row& r : rows) {
    if (r.has_theta != with_phase)
      throw IoError(path + ": mixed empty and non-empty theta_rad fields");
    if (seen(r.t, r.bus - 1))
      throw IoError(path + ": duplicate row for t=" + std::to_string(r.t) +
                    " bus " + std::to_string(r.bus));
    seen(r.t, r.bus - 1) = 1;
    ms.v_mag(r.t, r.bus - 1) = r.v;
    if (with_phase) ms.theta(r.t, r.bus - 1) = r.th;
    ms.p(r.t, r.bus - 1) = r.p;
    ms.q(r.t, r.bus - 1) = r.q;
  }
  return ms;
}

void save_sweep_csv(const std::vector<SweepRow>& rows,
                    const std::string& path) {
  auto f = open_out(path);
  f << "noise_level,method,rrmse_y\n";
  for (const SweepRow& r : rows) {
    f << fmt_g17(r.noise_level) << ',' << r.method << ',';
    if (r.failed)
      f << "nan";
    else
      f << fmt_g17(r.rrmse_y);
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& content) {
  auto f = open_out(path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace gridid
