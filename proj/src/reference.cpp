#include "gridid/reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "gridid/rng.hpp"

// Everything here is written as plain serial loops with small explicit
// blocks, deliberately arranged differently from the production kernels so
// the two implementations only agree if the math does.

namespace gridid::ref {

namespace {

constexpr double kCovReg = 1e-12;

using M2 = Eigen::Matrix2d;
using V2 = Eigen::Vector2d;

M2 weight2(double cc, double cd, double dd) {
  M2 c;
  c << cc + kCovReg, cd, cd, dd + kCovReg;
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  if (!(det > 0.0)) throw NumericError("singular measurement covariance");
  M2 w;
  w << c(1, 1) / det, -c(0, 1) / det, -c(1, 0) / det, c(0, 0) / det;
  return w;
}

// Real 2x2 representation of multiplication by a complex number.
M2 creal(cx y) {
  M2 b;
  b << y.real(), -y.imag(), y.imag(), y.real();
  return b;
}

int pair_index(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  // pairs (0,0)..(0,n-1),(1,1)..: row a starts at a*n - a*(a-1)/2
  return a * n - a * (a - 1) / 2 + (b - a);
}

}  // namespace

TrueStates synthesize_dataset(const NetworkModel& net,
                              const std::vector<Injections>& profiles,
                              const Vec& slack_v, const AdmittanceMatrix& y,
                              int slack) {
  if (profiles.empty()) throw ConfigError("no load profiles given");
  if (slack_v.size() != static_cast<Eigen::Index>(profiles.size()))
    throw ConfigError("slack voltage series length mismatch");
  (void)net;
  TrueStates ts;
  ts.injections.resize(profiles.size());
  ts.states.resize(profiles.size());
  for (size_t t = 0; t < profiles.size(); ++t) {
    try {
      ts.states[t] =
          solve_powerflow(y, profiles[t], slack_v[static_cast<int>(t)], slack)
              .state;
      ts.injections[t] = exact_powers(y, ts.states[t]);
    } catch (const std::exception& e) {
      throw NumericError("state synthesis failed at sample " +
                         std::to_string(t) + ": " + e.what());
    }
  }
  return ts;
}

MeasurementSet apply_noise(const TrueStates& truth, const NoiseSpec& spec,
                           bool with_phase, uint64_t seed,
                           double sigma_delta_inflation) {
  const int N = truth.N();
  if (N == 0) throw ConfigError("empty dataset");
  const int n = static_cast<int>(truth.states[0].v.size());

  MeasurementSet ms;
  ms.with_phase = with_phase;
  ms.noise = spec;
  ms.sigma_delta_inflation = sigma_delta_inflation;
  ms.v_mag.resize(N, n);
  ms.p.resize(N, n);
  ms.q.resize(N, n);
  ms.v_re.resize(N, n);
  ms.v_im.resize(N, n);
  ms.cov_v_cc.resize(N, n);
  ms.cov_v_cd.resize(N, n);
  ms.cov_v_dd.resize(N, n);
  if (with_phase) ms.theta.resize(N, n);

  for (int t = 0; t < N; ++t) {
    const VoltageState& st = truth.states[static_cast<size_t>(t)];
    const Injections& inj = truth.injections[static_cast<size_t>(t)];
    for (int h = 0; h < n; ++h) {
      const uint64_t idx =
          static_cast<uint64_t>(t) * static_cast<uint64_t>(n) +
          static_cast<uint64_t>(h);
      const double vm =
          st.v[h] * (1.0 + spec.sigma_v_rel *
                               rng::normal(seed, rng::kNoiseV, idx));
      ms.v_mag(t, h) = vm;
      ms.p(t, h) =
          inj.p[h] *
          (1.0 + spec.sigma_p_rel * rng::normal(seed, rng::kNoiseP, idx));
      ms.q(t, h) =
          inj.q[h] *
          (1.0 + spec.sigma_q_rel * rng::normal(seed, rng::kNoiseQ, idx));
      const double ve = spec.sigma_v_rel * vm * spec.sigma_v_rel * vm;
      if (with_phase) {
        const double thm =
            st.theta[h] +
            spec.sigma_theta * rng::normal(seed, rng::kNoiseTheta, idx);
        const double c = std::cos(thm), s = std::sin(thm);
        const double vd = spec.sigma_theta * spec.sigma_theta;
        const double v2 = vm * vm;
        ms.theta(t, h) = thm;
        ms.v_re(t, h) = vm * c;
        ms.v_im(t, h) = vm * s;
        ms.cov_v_cc(t, h) = ve * c * c + vd * v2 * s * s;
        ms.cov_v_cd(t, h) = s * c * (ve - vd * v2);
        ms.cov_v_dd(t, h) = ve * s * s + vd * v2 * c * c;
      } else {
        const double sd = sigma_delta_inflation * spec.sigma_theta;
        ms.v_re(t, h) = vm;
        ms.v_im(t, h) = 0.0;
        ms.cov_v_cc(t, h) = ve;
        ms.cov_v_cd(t, h) = 0.0;
        ms.cov_v_dd(t, h) = sd * sd * vm * vm;
      }
    }
  }
  return ms;
}

EstimationResult mle_estimate(const MeasurementSet& ms,
                              const EstimatorConfig& cfg) {
  if (!ms.centered) throw ConfigError("estimator requires centered data");
  if (!ms.has_currents())
    throw ConfigError("estimator requires derived currents");
  if ((cfg.phase_mode == PhaseMode::WithPhase) != ms.with_phase)
    throw ConfigError("estimator phase_mode does not match the dataset");

  const int N = ms.N(), n = ms.n();
  const int m = n * (n + 1) / 2;
  const CMat V = ms.voltage();
  const CMat I = ms.current();

  // OLS init through the normal equations (the production path uses QR).
  {
    CMat G = CMat::Zero(n, n);
    CMat B = CMat::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        cx ga(0, 0), ba(0, 0);
        for (int t = 0; t < N; ++t) {
          ga += std::conj(V(t, a)) * V(t, b);
          ba += std::conj(V(t, a)) * I(t, b);
        }
        G(a, b) = ga;
        B(a, b) = ba;
      }
    Eigen::PartialPivLU<CMat> lu(G);
    CMat y0 = lu.solve(B);
    if (!y0.allFinite()) throw NumericError("degenerate least squares");
    EstimationResult res;
    res.y_hat = y0;
    if (cfg.enforce_symmetry) {
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const cx v = 0.5 * (y0(a, b) + y0(b, a));
          res.y_hat(a, b) = v;
          res.y_hat(b, a) = v;
        }
    }
    res.delta_v_hat = CMat::Zero(N, n);
    res.delta_i_hat = CMat::Zero(N, n);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      const CMat Y = res.y_hat;

      // (b) noise projection, one small dense system per sample
      for (int t = 0; t < N; ++t) {
        std::vector<M2> Wi(static_cast<size_t>(n)), Wv(static_cast<size_t>(n));
        std::vector<V2> mr(static_cast<size_t>(n));
        for (int h = 0; h < n; ++h) {
          Wi[static_cast<size_t>(h)] =
              weight2(ms.cov_i_cc(t, h), ms.cov_i_cd(t, h), ms.cov_i_dd(t, h));
          Wv[static_cast<size_t>(h)] =
              weight2(ms.cov_v_cc(t, h), ms.cov_v_cd(t, h), ms.cov_v_dd(t, h));
          cx res_h = I(t, h);
          for (int k = 0; k < n; ++k) res_h -= V(t, k) * Y(k, h);
          mr[static_cast<size_t>(h)] = V2(res_h.real(), res_h.imag());
        }
        Mat Hm = Mat::Zero(2 * n, 2 * n);
        Vec rhs = Vec::Zero(2 * n);
        for (int a = 0; a < n; ++a) {
          Hm.block<2, 2>(2 * a, 2 * a) += Wv[static_cast<size_t>(a)];
          for (int b = 0; b < n; ++b)
            for (int h = 0; h < n; ++h)
              Hm.block<2, 2>(2 * a, 2 * b) +=
                  creal(Y(a, h)).transpose() * Wi[static_cast<size_t>(h)] *
                  creal(Y(b, h));
          V2 acc = V2::Zero();
          for (int h = 0; h < n; ++h)
            acc += creal(Y(a, h)).transpose() *
                   (Wi[static_cast<size_t>(h)] * mr[static_cast<size_t>(h)]);
          rhs.segment<2>(2 * a) = -acc;
        }
        const Vec dv = Eigen::PartialPivLU<Mat>(Hm).solve(rhs);
        for (int a = 0; a < n; ++a)
          res.delta_v_hat(t, a) = cx(dv[2 * a], dv[2 * a + 1]);
        for (int h = 0; h < n; ++h) {
          cx di(mr[static_cast<size_t>(h)][0], mr[static_cast<size_t>(h)][1]);
          for (int a = 0; a < n; ++a) di += res.delta_v_hat(t, a) * Y(a, h);
          res.delta_i_hat(t, h) = di;
        }
      }

      double F = 0.0;
      for (int t = 0; t < N; ++t)
        for (int h = 0; h < n; ++h) {
          const V2 dv(res.delta_v_hat(t, h).real(),
                      res.delta_v_hat(t, h).imag());
          const V2 di(res.delta_i_hat(t, h).real(),
                      res.delta_i_hat(t, h).imag());
          F += dv.dot(weight2(ms.cov_v_cc(t, h), ms.cov_v_cd(t, h),
                              ms.cov_v_dd(t, h)) *
                      dv);
          F += di.dot(weight2(ms.cov_i_cc(t, h), ms.cov_i_cd(t, h),
                              ms.cov_i_dd(t, h)) *
                      di);
        }
      res.neg_log_likelihood_trace.push_back(F);

      // (a) refit, accumulating the normal equations pair by pair
      Mat A = Mat::Zero(2 * m, 2 * m);
      Vec c = Vec::Zero(2 * m);
      for (int h = 0; h < n; ++h) {
        for (int t = 0; t < N; ++t) {
          const M2 W =
              weight2(ms.cov_i_cc(t, h), ms.cov_i_cd(t, h), ms.cov_i_dd(t, h));
          const V2 z(I(t, h).real(), I(t, h).imag());
          std::vector<M2> J(static_cast<size_t>(n));
          for (int a = 0; a < n; ++a)
            J[static_cast<size_t>(a)] = creal(V(t, a) - res.delta_v_hat(t, a));
          for (int a = 0; a < n; ++a) {
            const int pa = pair_index(a, h, n);
            const M2 JW = J[static_cast<size_t>(a)].transpose() * W;
            c.segment<2>(2 * pa) += JW * z;
            for (int b = 0; b < n; ++b) {
              const int pb = pair_index(b, h, n);
              A.block<2, 2>(2 * pa, 2 * pb) += JW * J[static_cast<size_t>(b)];
            }
          }
        }
      }
      const Vec x = Eigen::PartialPivLU<Mat>(A).solve(c);
      if (!x.allFinite())
        throw NumericError("normal equations solve failed (observability)");
      CMat Ynew(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
          const int pa = pair_index(a, b, n);
          Ynew(a, b) = cx(x[2 * pa], x[2 * pa + 1]);
          Ynew(b, a) = Ynew(a, b);
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
}

}  // namespace gridid::ref
