#include <chrono>
#include <cstdio>
#include <string>

#include "gridid/estimation.hpp"
#include "gridid/experiment.hpp"
#include "gridid/parallel.hpp"
#include "gridid/reference.hpp"
#include "gridid/rng.hpp"

namespace {

using clk = std::chrono::steady_clock;

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

template <typename F>
double time_once(F&& f) {
  const auto t0 = clk::now();
  f();
  return seconds_since(t0);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string net_path =
      argc > 1 ? argv[1] : std::string(GRIDID_DATA_DIR "/ieee33.json");
  int n_samples = argc > 2 ? std::atoi(argv[2]) : 480;
  int iters = argc > 3 ? std::atoi(argv[3]) : 5;

  gridid::ExperimentConfig cfg;
  cfg.network_path = net_path;
  cfg.n_samples = n_samples;
  cfg.noise_levels = {1e-3};
  cfg.methods = {"mle_with_phase"};

  std::printf("network %s, N=%d, threads=%d\n", net_path.c_str(), n_samples,
              gridid::thread_budget());

  const auto profiles = [&] {
    auto net = gridid::load_network(cfg.network_path);
    return gridid::generate_load_profiles(net, cfg.n_samples,
                                          cfg.sigma_load_rel, cfg.seed);
  }();
  const auto net = gridid::load_network(cfg.network_path);
  const auto y = gridid::build_admittance(net);
  const auto slack_v = gridid::generate_slack_voltages(
      cfg.n_samples, gridid::kSigmaSlackRel, cfg.seed);

  gridid::TrueStates truth, truth_ref;
  double t_synth = time_once([&] {
    truth = gridid::synthesize_dataset(net, profiles, slack_v, y,
                                       net.slack_index());
  });
  double t_synth_ref = time_once([&] {
    truth_ref = gridid::ref::synthesize_dataset(net, profiles, slack_v, y,
                                                net.slack_index());
  });

  const gridid::NoiseSpec spec = gridid::NoiseSpec::from_level(1e-3);
  gridid::MeasurementSet ms, ms_ref;
  double t_noise =
      time_once([&] { ms = gridid::apply_noise(truth, spec, true, cfg.seed); });
  double t_noise_ref = time_once(
      [&] { ms_ref = gridid::ref::apply_noise(truth, spec, true, cfg.seed); });

  gridid::derive_currents(ms);
  gridid::center(ms);
  gridid::derive_currents(ms_ref);
  gridid::center(ms_ref);

  gridid::EstimatorConfig ecfg;
  ecfg.phase_mode = gridid::PhaseMode::WithPhase;
  ecfg.max_iters = iters;
  ecfg.rel_tol = 1e-300;  // force exactly `iters` sweeps in both versions

  gridid::EstimationResult res, res_ref;
  double t_mle = time_once([&] { res = gridid::mle_estimate(ms, ecfg); });
  double t_mle_ref =
      time_once([&] { res_ref = gridid::ref::mle_estimate(ms_ref, ecfg); });

  const double agree =
      (res.y_hat - res_ref.y_hat).norm() / res_ref.y_hat.norm();

  std::printf("%-22s %12s %12s %8s\n", "kernel", "parallel[s]", "serial[s]",
              "speedup");
  std::printf("%-22s %12.4f %12.4f %8.2f\n", "synthesize_dataset", t_synth,
              t_synth_ref, t_synth_ref / t_synth);
  std::printf("%-22s %12.4f %12.4f %8.2f\n", "apply_noise", t_noise,
              t_noise_ref, t_noise_ref / t_noise);
  std::printf("%-22s %12.4f %12.4f %8.2f   (%d iterations)\n", "mle_estimate",
              t_mle, t_mle_ref, t_mle_ref / t_mle, iters);
  std::printf("per-iteration: parallel %.4f s, serial %.4f s\n",
              t_mle / iters, t_mle_ref / iters);
  std::printf("estimates agree to %.3e relative\n", agree);
  return 0;
}
