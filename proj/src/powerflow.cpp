#include "gridid/powerflow.hpp"

#include <cmath>

namespace gridid {

namespace {

void check_dims(const AdmittanceMatrix& y, int n) {
  if (y.g.rows() != n || y.g.cols() != n || y.b.rows() != n ||
      y.b.cols() != n)
    throw NumericError("admittance/state dimension mismatch");
}

}  // namespace

PowerflowResult solve_powerflow(const AdmittanceMatrix& y,
                                const Injections& inj, double slack_v,
                                int slack) {
  const int n = y.n();
  check_dims(y, static_cast<int>(inj.p.size()));
  if (slack < 0 || slack >= n) throw NumericError("slack index out of range");
  if (slack_v <= 0.0) throw NumericError("slack voltage must be positive");

  const double tol = 1e-10;
  const int itmax = 50;
  const int m = n - 1;  // non-slack count
  std::vector<int> ns;
  ns.reserve(static_cast<size_t>(m));
  for (int i = 0; i < n; ++i)
    if (i != slack) ns.push_back(i);

  Vec v = Vec::Constant(n, slack_v);
  Vec th = Vec::Zero(n);
  double mis = 0.0;

  for (int it = 0; it < itmax; ++it) {
    // Power mismatch at the current iterate.
    CVec V(n);
    for (int i = 0; i < n; ++i) V[i] = std::polar(v[i], th[i]);
    CVec I = y.complex_matrix() * V;
    Vec P(n), Q(n);
    for (int i = 0; i < n; ++i) {
      const cx s = V[i] * std::conj(I[i]);
      P[i] = s.real();
      Q[i] = s.imag();
    }
    Vec dp(m), dq(m);
    mis = 0.0;
    for (int a = 0; a < m; ++a) {
      dp[a] = inj.p[ns[static_cast<size_t>(a)]] - P[ns[static_cast<size_t>(a)]];
      dq[a] = inj.q[ns[static_cast<size_t>(a)]] - Q[ns[static_cast<size_t>(a)]];
      mis = std::max({mis, std::abs(dp[a]), std::abs(dq[a])});
    }
    if (mis < tol) return {{v, th}, it};

    // Polar Jacobian [[dP/dth, dP/dv], [dQ/dth, dQ/dv]] over non-slack buses.
    Mat Jac(2 * m, 2 * m);
    for (int a = 0; a < m; ++a) {
      const int h = ns[static_cast<size_t>(a)];
      for (int bcol = 0; bcol < m; ++bcol) {
        const int k = ns[static_cast<size_t>(bcol)];
        if (h == k) {
          Jac(a, bcol) = -Q[h] - y.b(h, h) * v[h] * v[h];
          Jac(a, m + bcol) = P[h] / v[h] + y.g(h, h) * v[h];
          Jac(m + a, bcol) = P[h] - y.g(h, h) * v[h] * v[h];
          Jac(m + a, m + bcol) = Q[h] / v[h] - y.b(h, h) * v[h];
        } else {
          const double ct = std::cos(th[h] - th[k]);
          const double st = std::sin(th[h] - th[k]);
          const double a1 = y.g(h, k) * ct + y.b(h, k) * st;
          const double a2 = y.g(h, k) * st - y.b(h, k) * ct;
          Jac(a, bcol) = v[h] * v[k] * a2;
          Jac(a, m + bcol) = v[h] * a1;
          Jac(m + a, bcol) = -v[h] * v[k] * a1;
          Jac(m + a, m + bcol) = v[h] * a2;
        }
      }
    }
    Vec rhs(2 * m);
    rhs.head(m) = dp;
    rhs.tail(m) = dq;
    Vec dx = Jac.partialPivLu().solve(rhs);
    if (!dx.allFinite())
      throw NumericError("power flow Jacobian solve produced non-finite step");
    for (int a = 0; a < m; ++a) {
      th[ns[static_cast<size_t>(a)]] += dx[a];
      v[ns[static_cast<size_t>(a)]] += dx[m + a];
    }
  }
  throw NumericError("power flow did not converge; last mismatch " +
                     std::to_string(mis));
}

Injections exact_powers(const AdmittanceMatrix& y, const VoltageState& st) {
  const int n = y.n();
  check_dims(y, static_cast<int>(st.v.size()));
  CVec V(n);
  for (int i = 0; i < n; ++i) V[i] = std::polar(st.v[i], st.theta[i]);
  CVec I = y.complex_matrix() * V;
  Injections out;
  out.p.resize(n);
  out.q.resize(n);
  for (int i = 0; i < n; ++i) {
    const cx s = V[i] * std::conj(I[i]);
    out.p[i] = s.real();
    out.q[i] = s.imag();
  }
  return out;
}

Injections linearized_powers(const AdmittanceMatrix& y,
                             const VoltageState& st) {
  const int n = y.n();
  check_dims(y, static_cast<int>(st.v.size()));
  const Vec& v = st.v;
  const Vec& th = st.theta;
  Injections out;
  out.p = Vec::Zero(n);
  out.q = Vec::Zero(n);
  for (int h = 0; h < n; ++h) {
    double pg = 0, pb = 0, qg = 0, qb = 0;
    for (int k = 0; k < n; ++k) {
      pg += v[k] * y.g(h, k);
      qb += v[k] * y.b(h, k);
      if (k != h) {
        const double d = th[h] - th[k];
        pb += v[k] * y.b(h, k) * d;
        qg += v[k] * y.g(h, k) * d;
      }
    }
    out.p[h] = v[h] * (pg + pb);
    out.q[h] = v[h] * (-qb + qg);
  }
  return out;
}

Injections adapted_constraint_powers(const AdmittanceMatrix& y,
                                     const VoltageState& st) {
  const int n = y.n();
  check_dims(y, static_cast<int>(st.v.size()));
  const Vec& v = st.v;
  const Vec& th = st.theta;
  Injections out;
  out.p = Vec::Zero(n);
  out.q = Vec::Zero(n);
  for (int h = 0; h < n; ++h) {
    const double uh = v[h] * th[h];
    double pg = 0, pb = 0, qg = 0, qb = 0;
    for (int k = 0; k < n; ++k) {
      pg += v[k] * y.g(h, k);
      qb += v[k] * y.b(h, k);
      if (k != h) {
        const double d = uh - v[k] * th[k];
        pb += y.b(h, k) * d;
        qg += y.g(h, k) * d;
      }
    }
    out.p[h] = v[h] * (pg + pb);
    out.q[h] = v[h] * (-qb + qg);
  }
  return out;
}

std::pair<Vec, Vec> constraint_difference(const AdmittanceMatrix& y,
                                          const VoltageState& st) {
  const int n = y.n();
  check_dims(y, static_cast<int>(st.v.size()));
  Vec dp = Vec::Zero(n), dq = Vec::Zero(n);
  for (int h = 0; h < n; ++h) {
    double sb = 0, sg = 0;
    for (int k = 0; k < n; ++k) {
      if (k == h) continue;
      sb += y.b(h, k) * (st.v[h] - st.v[k]);
      sg += y.g(h, k) * (st.v[h] - st.v[k]);
    }
    dp[h] = std::abs(st.v[h] * st.theta[h] * sb);
    dq[h] = std::abs(st.v[h] * st.theta[h] * sg);
  }
  return {dp, dq};
}

}  // namespace gridid
