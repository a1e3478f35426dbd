#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gridid/experiment.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Admittance-matrix identification from smart-meter data"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  uint64_t seed_override = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config JSON")
        ->required();
    sub->add_option("--out", out_override, "override output directory");
    sub->add_option("--seed", seed_override, "override master seed")
        ->each([&](const std::string&) { have_seed = true; });
  };

  auto* gen = app.add_subcommand("generate", "synthesize a dataset");
  add_common(gen);
  auto* sweep =
      app.add_subcommand("sweep", "noise-level x method error sweep");
  add_common(sweep);
  auto* cmp = app.add_subcommand(
      "compare-approx", "power/current approximation error tables");
  add_common(cmp);

  auto* est = app.add_subcommand("estimate", "estimate from a dataset");
  std::string dataset_dir, method, est_out = ".";
  double noise_level = 0.0;
  est->add_option("--dataset", dataset_dir, "dataset directory")->required();
  est->add_option("--method", method, "estimation method")->required();
  est->add_option("--noise-level", noise_level,
                  "noise level of the measurement file")
      ->required();
  est->add_option("--out", est_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  auto load_cfg = [&]() {
    gridid::ExperimentConfig cfg =
        gridid::load_experiment_config(config_path);
    if (have_seed) cfg.seed = seed_override;
    if (!out_override.empty()) cfg.output_dir = out_override;
    return cfg;
  };

  if (gen->parsed()) {
    gridid::cmd_generate(load_cfg());
  } else if (sweep->parsed()) {
    const auto rows = gridid::cmd_sweep(load_cfg());
    for (const auto& r : rows)
      std::cout << r.noise_level << ',' << r.method << ','
                << (r.failed ? std::string("nan")
                             : gridid::fmt_g17(r.rrmse_y))
                << '\n';
  } else if (cmp->parsed()) {
    gridid::cmd_compare_approx(load_cfg());
  } else if (est->parsed()) {
    gridid::cmd_estimate(dataset_dir, method, noise_level, est_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gridid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gridid::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const gridid::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
