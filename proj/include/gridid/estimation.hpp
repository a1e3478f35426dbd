#pragma once

#include <vector>

#include "gridid/measurement.hpp"
#include "gridid/types.hpp"

namespace gridid {

enum class PhaseMode { WithPhase, Phaseless };

struct EstimatorConfig {
  int max_iters = 100;
  double rel_tol = 1e-8;  // on ||Y_new - Y_old||_F / ||Y_old||_F
  bool enforce_symmetry = true;
  PhaseMode phase_mode = PhaseMode::WithPhase;
  double sigma_delta_inflation = 100.0;
};

struct EstimationResult {
  CMat y_hat;
  CMat delta_v_hat;  // N x n fitted voltage noise
  CMat delta_i_hat;
  std::vector<double> neg_log_likelihood_trace;  // one entry per iteration
  bool converged = false;
  int iterations = 0;
};

// Quadratic Mahalanobis form of the Gaussian noise model: sum over (t,h) of
// [Re,Im]' Cov^{-1} [Re,Im] for both noise matrices. Covariance diagonals are
// regularized by +1e-12 before inversion.
double neg_log_likelihood(const CMat& delta_v, const CMat& delta_i,
                          const MeasurementSet& ms);

// Plain least squares treating the voltage as noiseless; symmetrized as
// (Y + Y^T)/2 when requested. Throws NumericError on rank deficiency.
CMat ols_estimate(const MeasurementSet& ms, bool enforce_symmetry = true);

// Alternating weighted total-least-squares estimator. Requires a centered
// set with derived currents.
EstimationResult mle_estimate(const MeasurementSet& ms,
                              const EstimatorConfig& cfg);

// Adaptive L1 baseline: coordinate descent over the upper-triangle entries,
// penalty weights 1/(|Y_ols| + tau), lambda picked on a held-out 20% tail
// split (smallest lambda within 1% of the best validation error).
CMat lasso_estimate(const MeasurementSet& ms,
                    const std::vector<double>& lambda_grid);

std::vector<double> default_lambda_grid();

}  // namespace gridid
