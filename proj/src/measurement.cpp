#include "gridid/measurement.hpp"

#include <cmath>
#include <string>

#include "gridid/parallel.hpp"
#include "gridid/rng.hpp"

namespace gridid {

std::vector<Injections> generate_load_profiles(const NetworkModel& net,
                                               int n_samples,
                                               double sigma_load_rel,
                                               uint64_t seed) {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (sigma_load_rel < 0) throw ConfigError("sigma_load_rel must be >= 0");
  const int n = net.n();
  const Vec p0 = net.nominal_p();
  const Vec q0 = net.nominal_q();
  const int slack = net.slack_index();
  std::vector<Injections> out(static_cast<size_t>(n_samples));
  for (int t = 0; t < n_samples; ++t) {
    Injections& inj = out[static_cast<size_t>(t)];
    inj.p.resize(n);
    inj.q.resize(n);
    for (int h = 0; h < n; ++h) {
      const uint64_t idx = static_cast<uint64_t>(t) * static_cast<uint64_t>(n) +
                           static_cast<uint64_t>(h);
      inj.p[h] = p0[h] * (1.0 + sigma_load_rel *
                                    rng::normal(seed, rng::kLoadP, idx));
      inj.q[h] = q0[h] * (1.0 + sigma_load_rel *
                                    rng::normal(seed, rng::kLoadQ, idx));
    }
    inj.p[slack] = 0.0;
    inj.q[slack] = 0.0;
  }
  return out;
}

Vec generate_slack_voltages(int n_samples, double sigma_slack_rel,
                            uint64_t seed) {
  Vec out(n_samples);
  for (int t = 0; t < n_samples; ++t)
    out[t] = 1.0 + sigma_slack_rel *
                       rng::normal(seed, rng::kSlackV,
                                   static_cast<uint64_t>(t));
  return out;
}

TrueStates synthesize_dataset(const NetworkModel& net,
                              const std::vector<Injections>& profiles,
                              const Vec& slack_v, const AdmittanceMatrix& y,
                              int slack) {
  if (profiles.empty()) throw ConfigError("no load profiles given");
  if (slack_v.size() != static_cast<Eigen::Index>(profiles.size()))
    throw ConfigError("slack voltage series length mismatch");
  (void)net;
  const int N = static_cast<int>(profiles.size());
  TrueStates ts;
  ts.states.resize(static_cast<size_t>(N));
  ts.injections.resize(static_cast<size_t>(N));

  std::string first_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
  for (int t = 0; t < N; ++t) {
    try {
      const VoltageState st =
          solve_powerflow(y, profiles[static_cast<size_t>(t)], slack_v[t],
                          slack)
              .state;
      ts.states[static_cast<size_t>(t)] = st;
      // Meters see the realized injections, which at the slack bus is the
      // feeder import, not the (zero) scheduled load.
      ts.injections[static_cast<size_t>(t)] = exact_powers(y, st);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (first_error.empty())
        first_error = "sample " + std::to_string(t) + ": " + e.what();
    }
  }
  if (!first_error.empty())
    throw NumericError("state synthesis failed at " + first_error);
  return ts;
}

Eigen::Matrix2d polar_covariance_to_cartesian(double v_meas, double theta_meas,
                                              double var_eps,
                                              double var_delta) {
  if (var_eps < 0 || var_delta < 0)
    throw NumericError("noise variances must be non-negative");
  const double c = std::cos(theta_meas), s = std::sin(theta_meas);
  const double v2 = v_meas * v_meas;
  Eigen::Matrix2d cov;
  cov(0, 0) = var_eps * c * c + var_delta * v2 * s * s;
  cov(1, 1) = var_eps * s * s + var_delta * v2 * c * c;
  cov(0, 1) = cov(1, 0) = s * c * (var_eps - var_delta * v2);
  return cov;
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
  if (with_phase) ms.theta.resize(N, n);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
  for (int t = 0; t < N; ++t) {
    const VoltageState& st = truth.states[static_cast<size_t>(t)];
    const Injections& inj = truth.injections[static_cast<size_t>(t)];
    for (int h = 0; h < n; ++h) {
      const uint64_t idx = static_cast<uint64_t>(t) * static_cast<uint64_t>(n) +
                           static_cast<uint64_t>(h);
      ms.v_mag(t, h) =
          st.v[h] * (1.0 + spec.sigma_v_rel *
                               rng::normal(seed, rng::kNoiseV, idx));
      ms.p(t, h) = inj.p[h] * (1.0 + spec.sigma_p_rel *
                                         rng::normal(seed, rng::kNoiseP, idx));
      ms.q(t, h) = inj.q[h] * (1.0 + spec.sigma_q_rel *
                                         rng::normal(seed, rng::kNoiseQ, idx));
      if (with_phase)
        ms.theta(t, h) =
            st.theta[h] +
            spec.sigma_theta * rng::normal(seed, rng::kNoiseTheta, idx);
    }
  }
  attach_covariances(ms);
  return ms;
}

void attach_covariances(MeasurementSet& ms) {
  const int N = ms.N(), n = ms.n();
  if (N == 0) throw ConfigError("empty measurement set");
  if (ms.with_phase && ms.theta.size() == 0)
    throw ConfigError("with-phase set has no angle plane");
  if (ms.centered)
    throw NumericError("covariances are defined at raw measured values");
  const NoiseSpec& spec = ms.noise;
  ms.v_re.resize(N, n);
  ms.v_im.resize(N, n);
  ms.cov_v_cc.resize(N, n);
  ms.cov_v_cd.resize(N, n);
  ms.cov_v_dd.resize(N, n);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
  for (int t = 0; t < N; ++t) {
    for (int h = 0; h < n; ++h) {
      const double vm = ms.v_mag(t, h);
      const double var_eps = spec.sigma_v_rel * vm * spec.sigma_v_rel * vm;
      if (ms.with_phase) {
        const double thm = ms.theta(t, h);
        ms.v_re(t, h) = vm * std::cos(thm);
        ms.v_im(t, h) = vm * std::sin(thm);
        const Eigen::Matrix2d cov = polar_covariance_to_cartesian(
            vm, thm, var_eps, spec.sigma_theta * spec.sigma_theta);
        ms.cov_v_cc(t, h) = cov(0, 0);
        ms.cov_v_cd(t, h) = cov(0, 1);
        ms.cov_v_dd(t, h) = cov(1, 1);
      } else {
        // Magnitude-only sensor: the imaginary part is unmodelled, so its
        // variance is inflated to (inflation * sigma_theta)^2 * v^2.
        ms.v_re(t, h) = vm;
        ms.v_im(t, h) = 0.0;
        const double sd = ms.sigma_delta_inflation * spec.sigma_theta;
        ms.cov_v_cc(t, h) = var_eps;
        ms.cov_v_cd(t, h) = 0.0;
        ms.cov_v_dd(t, h) = sd * sd * vm * vm;
      }
    }
  }
}

void derive_currents(MeasurementSet& ms) {
  const int N = ms.N(), n = ms.n();
  if (ms.centered)
    throw NumericError("derive_currents requires uncentered data");
  ms.i_re.resize(N, n);
  ms.i_im.resize(N, n);
  ms.cov_i_cc.resize(N, n);
  ms.cov_i_cd.resize(N, n);
  ms.cov_i_dd.resize(N, n);
  const NoiseSpec& sp = ms.noise;

  std::string first_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_budget())
#endif
  for (int t = 0; t < N; ++t) {
    for (int h = 0; h < n; ++h) {
      const double vm = ms.v_mag(t, h);
      if (vm == 0.0) {
#ifdef _OPENMP
#pragma omp critical
#endif
        if (first_error.empty())
          first_error = "zero voltage magnitude at t=" + std::to_string(t) +
                        " bus " + std::to_string(h + 1);
        continue;
      }
      const cx V(ms.v_re(t, h), ms.v_im(t, h));
      const cx I = std::conj(cx(ms.p(t, h), ms.q(t, h)) / V);
      ms.i_re(t, h) = I.real();
      ms.i_im(t, h) = I.imag();

      // First-order propagation of (P, Q, v, theta) through conj(S/V).
      const double c = ms.with_phase ? std::cos(ms.theta(t, h)) : 1.0;
      const double s = ms.with_phase ? std::sin(ms.theta(t, h)) : 0.0;
      const double sig_th = ms.with_phase ? sp.sigma_theta : 0.0;
      const double dP = sp.sigma_p_rel * ms.p(t, h);
      const double dQ = sp.sigma_q_rel * ms.q(t, h);
      const double dV = sp.sigma_v_rel * vm;
      const double ire = I.real(), iim = I.imag();
      const double j0[4] = {c / vm, s / vm, -ire / vm, -iim};
      const double j1[4] = {s / vm, -c / vm, -iim / vm, ire};
      const double d[4] = {dP * dP, dQ * dQ, dV * dV, sig_th * sig_th};
      double cc = 0, cd = 0, dd = 0;
      for (int a = 0; a < 4; ++a) {
        cc += j0[a] * d[a] * j0[a];
        cd += j0[a] * d[a] * j1[a];
        dd += j1[a] * d[a] * j1[a];
      }
      ms.cov_i_cc(t, h) = cc;
      ms.cov_i_cd(t, h) = cd;
      ms.cov_i_dd(t, h) = dd;
    }
  }
  if (!first_error.empty()) throw NumericError(first_error);
}

void center(MeasurementSet& ms) {
  auto center_cols = [](Mat& m) {
    if (m.size() == 0) return;
    m.rowwise() -= m.colwise().mean();
  };
  center_cols(ms.v_mag);
  center_cols(ms.theta);
  center_cols(ms.p);
  center_cols(ms.q);
  center_cols(ms.v_re);
  center_cols(ms.v_im);
  center_cols(ms.i_re);
  center_cols(ms.i_im);
  ms.centered = true;
}

}  // namespace gridid
