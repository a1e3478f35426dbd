#pragma once

// Serial reference implementations of the parallelized kernels, written as
// plain loops. The tests check the production kernels against these; the
// benchmark compares their speed.

#include "gridid/estimation.hpp"
#include "gridid/measurement.hpp"

namespace gridid::ref {

TrueStates synthesize_dataset(const NetworkModel& net,
                              const std::vector<Injections>& profiles,
                              const Vec& slack_v, const AdmittanceMatrix& y,
                              int slack = 0);

MeasurementSet apply_noise(const TrueStates& truth, const NoiseSpec& spec,
                           bool with_phase, uint64_t seed,
                           double sigma_delta_inflation = 100.0);

EstimationResult mle_estimate(const MeasurementSet& ms,
                              const EstimatorConfig& cfg);

}  // namespace gridid::ref
