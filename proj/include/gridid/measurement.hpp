#pragma once

#include <cstdint>
#include <vector>

#include "gridid/network.hpp"
#include "gridid/powerflow.hpp"
#include "gridid/types.hpp"

namespace gridid {

// Relative stds except sigma_theta (radians). from_level maps a scalar noise
// level x to: x on P and Q, x/100 on |V|, and x/100 rad on the angle.
struct NoiseSpec {
  double sigma_v_rel = 0.0;
  double sigma_theta = 0.0;
  double sigma_p_rel = 0.0;
  double sigma_q_rel = 0.0;
  static NoiseSpec from_level(double x) {
    return {x / 100.0, x / 100.0, x, x};
  }
  bool all_zero() const {
    return sigma_v_rel == 0 && sigma_theta == 0 && sigma_p_rel == 0 &&
           sigma_q_rel == 0;
  }
};

struct TrueStates {
  std::vector<VoltageState> states;
  std::vector<Injections> injections;
  int N() const { return static_cast<int>(states.size()); }
};

// Per-entry 2x2 covariances are stored as three N x n planes (cc, cd, dd);
// the first axis of every plane is time.
struct MeasurementSet {
  Mat v_mag, theta;  // theta has zero size in phaseless sets
  Mat p, q;
  Mat v_re, v_im;  // cartesian voltage as used by the estimator
  Mat i_re, i_im;  // derived currents (empty until derive_currents)
  Mat cov_v_cc, cov_v_cd, cov_v_dd;
  Mat cov_i_cc, cov_i_cd, cov_i_dd;
  NoiseSpec noise;  // spec the set was generated with; drives cov_i
  double sigma_delta_inflation = 100.0;
  bool with_phase = false;
  bool centered = false;

  int N() const { return static_cast<int>(v_mag.rows()); }
  int n() const { return static_cast<int>(v_mag.cols()); }
  bool has_currents() const { return i_re.size() > 0; }
  CMat voltage() const { return v_re.cast<cx>() + cx(0, 1) * v_im.cast<cx>(); }
  CMat current() const { return i_re.cast<cx>() + cx(0, 1) * i_im.cast<cx>(); }
};

// Loads drawn per (sample, node): N(nominal, (sigma_load_rel*nominal)^2),
// independent across nodes, samples, and P/Q. Slack row stays zero.
std::vector<Injections> generate_load_profiles(const NetworkModel& net,
                                               int n_samples,
                                               double sigma_load_rel,
                                               uint64_t seed);

// Substation voltage per sample: N(1.0, sigma^2). A fixed feeder-head voltage
// makes the slack column of the centered data identically zero and the slack
// row/column of Y unidentifiable, so the generator always varies it.
inline constexpr double kSigmaSlackRel = 0.01;
Vec generate_slack_voltages(int n_samples, double sigma_slack_rel,
                            uint64_t seed);

TrueStates synthesize_dataset(const NetworkModel& net,
                              const std::vector<Injections>& profiles,
                              const Vec& slack_v, const AdmittanceMatrix& y,
                              int slack = 0);

// [[var_c, cov], [cov, var_d]] of cartesian noise given polar noise variances
// evaluated at the measured (v, theta).
Eigen::Matrix2d polar_covariance_to_cartesian(double v_meas, double theta_meas,
                                              double var_eps, double var_delta);

// Multiplicative noise on v/p/q, additive on theta (with-phase only).
// Phaseless sets carry the inflated imaginary-part voltage variance
// (inflation * sigma_theta)^2 * v^2 in cov_v_dd.
MeasurementSet apply_noise(const TrueStates& truth, const NoiseSpec& spec,
                           bool with_phase, uint64_t seed,
                           double sigma_delta_inflation = 100.0);

// Fills v_re/v_im and the voltage covariance planes from v_mag, theta (when
// present), ms.noise and ms.sigma_delta_inflation. Lets a set loaded from CSV
// reconstruct exactly what apply_noise would have produced.
void attach_covariances(MeasurementSet& ms);

// I~ = conj((p + jq) / V~), V~ from the stored cartesian voltage; fills cov_i
// by first-order propagation of (sigma_P, sigma_Q, sigma_v, sigma_theta).
void derive_currents(MeasurementSet& ms);

// Subtracts the time mean from every data column (magnitude, angle, powers,
// cartesian voltage and current). Covariances unchanged.
void center(MeasurementSet& ms);

}  // namespace gridid
