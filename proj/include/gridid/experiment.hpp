#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridid/estimation.hpp"
#include "gridid/io.hpp"
#include "gridid/measurement.hpp"
#include "gridid/metrics.hpp"
#include "gridid/network.hpp"

namespace gridid {

struct ExperimentConfig {
  std::string network_path;
  int n_samples = 1440;
  double sigma_load_rel = 0.2;
  std::vector<double> noise_levels;  // fractions, each within [0, 0.1]
  uint64_t seed = 1;
  std::vector<std::string> methods;  // subset of kMethodNames
  std::string output_dir = ".";
};

inline const std::vector<std::string> kMethodNames = {
    "mle_with_phase", "mle_phaseless", "lasso_with_phase", "lasso_phaseless"};

ExperimentConfig load_experiment_config(const std::string& path);
void validate(const ExperimentConfig& cfg);

// Shared pipeline pieces -----------------------------------------------------

struct Dataset {
  NetworkModel net;
  AdmittanceMatrix y;
  TrueStates truth;
};

Dataset build_dataset(const ExperimentConfig& cfg);

// apply_noise -> derive_currents -> center, ready for the estimators.
MeasurementSet prepare_measurements(const Dataset& ds, double noise_level,
                                    bool with_phase, uint64_t seed);

// Runs one named method on a prepared set; returns the estimate.
CMat run_method(const std::string& method, const Dataset& ds,
                double noise_level, uint64_t seed,
                EstimationResult* mle_result = nullptr);

// Commands (the CLI is a thin shell over these) -------------------------------

// True-state CSV plus one measurement CSV per noise level, and manifest.json.
void cmd_generate(const ExperimentConfig& cfg);

// Estimate from a generated dataset directory; writes y_hat CSV, a MetricReport
// row, and the per-iteration objective trace.
void cmd_estimate(const std::string& dataset_dir, const std::string& method,
                  double noise_level, const std::string& out_dir);

// noise level x method grid -> sweep.csv (noise_level,method,rrmse_y).
// Cells use independent child seeds, so results don't depend on ordering.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg);

// Power-model and current-approximation error tables at noise level 1e-3.
void cmd_compare_approx(const ExperimentConfig& cfg);

}  // namespace gridid
