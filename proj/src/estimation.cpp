#include "gridid/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "gridid/parallel.hpp"

namespace gridid {

namespace {

constexpr double kCovReg = 1e-12;  // added to covariance diagonals

struct W2 {
  double w11, w12, w22;
};

// Inverse of [[cc,cd],[cd,dd]] + kCovReg*I.
inline W2 inv2(double cc, double cd, double dd) {
  const double a = cc + kCovReg, d = dd + kCovReg;
  const double det = a * d - cd * cd;
  if (!(det > 0.0)) throw NumericError("singular measurement covariance");
  return {d / det, -cd / det, a / det};
}

struct WeightPlanes {
  Mat w11, w12, w22;
};

WeightPlanes invert_planes(const Mat& cc, const Mat& cd, const Mat& dd) {
  WeightPlanes w;
  const int N = static_cast<int>(cc.rows()), n = static_cast<int>(cc.cols());
  w.w11.resize(N, n);
  w.w12.resize(N, n);
  w.w22.resize(N, n);
  for (int t = 0; t < N; ++t)
    for (int h = 0; h < n; ++h) {
      const W2 ww = inv2(cc(t, h), cd(t, h), dd(t, h));
      w.w11(t, h) = ww.w11;
      w.w12(t, h) = ww.w12;
      w.w22(t, h) = ww.w22;
    }
  return w;
}

// Upper-triangle pair index; pairs (a,b), a<=b, counted row-major.
struct PairMap {
  int n = 0;
  std::vector<int> idx;  // n*n
  int m() const { return n * (n + 1) / 2; }
  explicit PairMap(int nn) : n(nn), idx(static_cast<size_t>(nn * nn)) {
    int next = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        idx[static_cast<size_t>(a * n + b)] = next;
        idx[static_cast<size_t>(b * n + a)] = next;
        ++next;
      }
  }
  int operator()(int a, int b) const {
    return idx[static_cast<size_t>(a * n + b)];
  }
};

void require_ready(const MeasurementSet& ms) {
  if (!ms.centered) throw ConfigError("estimator requires centered data");
  if (!ms.has_currents())
    throw ConfigError("estimator requires derived currents");
  if (ms.N() < ms.n())
    throw NumericError("fewer samples than nodes (underdetermined)");
}

}  // namespace

double neg_log_likelihood(const CMat& delta_v, const CMat& delta_i,
                          const MeasurementSet& ms) {
  if (delta_v.rows() != delta_i.rows() || delta_v.cols() != delta_i.cols() ||
      delta_v.rows() != ms.v_mag.rows() || delta_v.cols() != ms.v_mag.cols())
    throw NumericError("noise matrix dimension mismatch");
  const int N = ms.N(), n = ms.n();
  return chunked_sum(N, [&](int t) {
    double s = 0.0;
    for (int h = 0; h < n; ++h) {
      const W2 wv = inv2(ms.cov_v_cc(t, h), ms.cov_v_cd(t, h),
                         ms.cov_v_dd(t, h));
      const W2 wi = inv2(ms.cov_i_cc(t, h), ms.cov_i_cd(t, h),
                         ms.cov_i_dd(t, h));
      const double vr = delta_v(t, h).real(), vi = delta_v(t, h).imag();
      const double ir = delta_i(t, h).real(), ii = delta_i(t, h).imag();
      s += wv.w11 * vr * vr + 2.0 * wv.w12 * vr * vi + wv.w22 * vi * vi;
      s += wi.w11 * ir * ir + 2.0 * wi.w12 * ir * ii + wi.w22 * ii * ii;
    }
    return s;
  });
}

CMat ols_estimate(const MeasurementSet& ms, bool enforce_symmetry) {
  require_ready(ms);
  const int n = ms.n();
  const CMat V = ms.voltage();
  const CMat I = ms.current();
  Eigen::ColPivHouseholderQR<CMat> qr(V);
  if (qr.rank() < n)
    throw NumericError("voltage matrix is rank-deficient (" +
                       std::to_string(qr.rank()) + " of " + std::to_string(n) +
                       "): unobservable network");
  CMat y = qr.solve(I);
  if (enforce_symmetry) {
    const CMat yt = y.transpose();
    y = 0.5 * (y + yt);
  }
  return y;
}

EstimationResult mle_estimate(const MeasurementSet& ms,
                              const EstimatorConfig& cfg) {
  require_ready(ms);
  if ((cfg.phase_mode == PhaseMode::WithPhase) != ms.with_phase)
    throw ConfigError("estimator phase_mode does not match the dataset");
  if (cfg.max_iters < 1 || cfg.rel_tol <= 0)
    throw ConfigError("bad estimator configuration");

  const int N = ms.N(), n = ms.n();
  const PairMap pair(n);
  const int npar = 2 * pair.m();

  const CMat Vc = ms.voltage();
  const CMat Ic = ms.current();
  const WeightPlanes Wv =
      invert_planes(ms.cov_v_cc, ms.cov_v_cd, ms.cov_v_dd);
  const WeightPlanes Wi =
      invert_planes(ms.cov_i_cc, ms.cov_i_cd, ms.cov_i_dd);

  EstimationResult res;
  res.y_hat = ols_estimate(ms, cfg.enforce_symmetry);
  res.delta_v_hat = CMat::Zero(N, n);
  res.delta_i_hat = CMat::Zero(N, n);

  Mat Cb(2 * n, 2 * n);           // real representation of y_hat, block (h,k)
  Mat dv_re(N, n), dv_im(N, n);   // fitted voltage noise
  Mat di_re(N, n), di_im(N, n);
  std::vector<Mat> Hh(static_cast<size_t>(n));  // per-column normal blocks
  std::vector<Vec> rh(static_cast<size_t>(n));

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const CMat& Y = res.y_hat;

    // --- (b) project measurement noise given Y ---------------------------
    for (int h = 0; h < n; ++h)
      for (int k = 0; k < n; ++k) {
        const cx y = Y(k, h);
        Cb(2 * h, 2 * k) = y.real();
        Cb(2 * h, 2 * k + 1) = -y.imag();
        Cb(2 * h + 1, 2 * k) = y.imag();
        Cb(2 * h + 1, 2 * k + 1) = y.real();
      }
    const CMat Mres = Ic - Vc * Y;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
    for (int t = 0; t < N; ++t) {
      Mat WC(2 * n, 2 * n);
      for (int h = 0; h < n; ++h) {
        WC.row(2 * h) = Wi.w11(t, h) * Cb.row(2 * h) +
                        Wi.w12(t, h) * Cb.row(2 * h + 1);
        WC.row(2 * h + 1) = Wi.w12(t, h) * Cb.row(2 * h) +
                            Wi.w22(t, h) * Cb.row(2 * h + 1);
      }
      Mat Hm(2 * n, 2 * n);
      Hm.noalias() = Cb.transpose() * WC;
      Vec g(2 * n);
      for (int h = 0; h < n; ++h) {
        const double mr = Mres(t, h).real(), mi = Mres(t, h).imag();
        g[2 * h] = Wi.w11(t, h) * mr + Wi.w12(t, h) * mi;
        g[2 * h + 1] = Wi.w12(t, h) * mr + Wi.w22(t, h) * mi;
        Hm(2 * h, 2 * h) += Wv.w11(t, h);
        Hm(2 * h, 2 * h + 1) += Wv.w12(t, h);
        Hm(2 * h + 1, 2 * h) += Wv.w12(t, h);
        Hm(2 * h + 1, 2 * h + 1) += Wv.w22(t, h);
      }
      Vec rhs = -(Cb.transpose() * g);
      Vec dv = Hm.llt().solve(rhs);
      for (int h = 0; h < n; ++h) {
        dv_re(t, h) = dv[2 * h];
        dv_im(t, h) = dv[2 * h + 1];
      }
    }

    // delta_i follows from the constraint; objective is recorded afterwards
    // with a fixed summation order so thread count cannot change the trace.
    CMat dV = dv_re.cast<cx>() + cx(0, 1) * dv_im.cast<cx>();
    CMat dI = Mres + dV * Y;
    di_re = dI.real();
    di_im = dI.imag();
    const double F = chunked_sum(N, [&](int t) {
      double s = 0.0;
      for (int h = 0; h < n; ++h) {
        const double vr = dv_re(t, h), vi = dv_im(t, h);
        const double ir = di_re(t, h), ii = di_im(t, h);
        s += Wv.w11(t, h) * vr * vr + 2.0 * Wv.w12(t, h) * vr * vi +
             Wv.w22(t, h) * vi * vi;
        s += Wi.w11(t, h) * ir * ir + 2.0 * Wi.w12(t, h) * ir * ii +
             Wi.w22(t, h) * ii * ii;
      }
      return s;
    });
    res.neg_log_likelihood_trace.push_back(F);
    res.delta_v_hat = dV;
    res.delta_i_hat = dI;

    // --- (a) refit Y given the denoised regressor ------------------------
    const Mat R = Vc.real() - dv_re;
    const Mat M = Vc.imag() - dv_im;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
    for (int h = 0; h < n; ++h) {
      const Vec w1 = Wi.w11.col(h), w2 = Wi.w12.col(h), w3 = Wi.w22.col(h);
      const Mat Rw1 = w1.asDiagonal() * R, Mw1 = w1.asDiagonal() * M;
      const Mat Rw2 = w2.asDiagonal() * R, Mw2 = w2.asDiagonal() * M;
      const Mat Rw3 = w3.asDiagonal() * R, Mw3 = w3.asDiagonal() * M;
      Mat RR1(n, n), RM1(n, n), MM1(n, n), RR2(n, n), RM2(n, n), MM2(n, n),
          RR3(n, n), RM3(n, n), MM3(n, n);
      RR1.noalias() = R.transpose() * Rw1;
      RM1.noalias() = R.transpose() * Mw1;
      MM1.noalias() = M.transpose() * Mw1;
      RR2.noalias() = R.transpose() * Rw2;
      RM2.noalias() = R.transpose() * Mw2;
      MM2.noalias() = M.transpose() * Mw2;
      RR3.noalias() = R.transpose() * Rw3;
      RM3.noalias() = R.transpose() * Mw3;
      MM3.noalias() = M.transpose() * Mw3;

      Mat& H = Hh[static_cast<size_t>(h)];
      H.resize(2 * n, 2 * n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          H(2 * a, 2 * b) = RR1(a, b) + RM2(b, a) + RM2(a, b) + MM3(a, b);
          H(2 * a, 2 * b + 1) =
              -RM1(a, b) + RR2(a, b) - MM2(a, b) + RM3(b, a);
          H(2 * a + 1, 2 * b) =
              -RM1(b, a) + RR2(a, b) - MM2(a, b) + RM3(a, b);
          H(2 * a + 1, 2 * b + 1) =
              MM1(a, b) - RM2(a, b) - RM2(b, a) + RR3(a, b);
        }

      const Vec tr = Ic.col(h).real(), ti = Ic.col(h).imag();
      const Vec g1 = w1.cwiseProduct(tr) + w2.cwiseProduct(ti);
      const Vec g2 = w2.cwiseProduct(tr) + w3.cwiseProduct(ti);
      Vec& r = rh[static_cast<size_t>(h)];
      r.resize(2 * n);
      const Vec a1 = R.transpose() * g1 + M.transpose() * g2;
      const Vec a2 = -(M.transpose() * g1) + R.transpose() * g2;
      for (int a = 0; a < n; ++a) {
        r[2 * a] = a1[a];
        r[2 * a + 1] = a2[a];
      }
    }

    // Serial scatter keeps the accumulation order fixed.
    Mat A = Mat::Zero(npar, npar);
    Vec c = Vec::Zero(npar);
    std::vector<int> rows(static_cast<size_t>(2 * n));
    for (int h = 0; h < n; ++h) {
      for (int a = 0; a < n; ++a) {
        rows[static_cast<size_t>(2 * a)] = 2 * pair(a, h);
        rows[static_cast<size_t>(2 * a + 1)] = 2 * pair(a, h) + 1;
      }
      const Mat& H = Hh[static_cast<size_t>(h)];
      const Vec& r = rh[static_cast<size_t>(h)];
      for (int a = 0; a < 2 * n; ++a) {
        const int ra = rows[static_cast<size_t>(a)];
        c[ra] += r[a];
        for (int b = 0; b < 2 * n; ++b)
          A(ra, rows[static_cast<size_t>(b)]) += H(a, b);
      }
    }

    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success)
      throw NumericError(
          "normal equations not positive definite (observability failure)");
    const Vec x = llt.solve(c);

    CMat Ynew(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        const cx v(x[2 * pair(a, b)], x[2 * pair(a, b) + 1]);
        Ynew(a, b) = v;
        Ynew(b, a) = v;
      }

    const double rel = (Ynew - Y).norm() / std::max(Y.norm(), 1e-300);
    res.y_hat = Ynew;
    res.iterations = iter + 1;
    if (rel <= cfg.rel_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gridid
