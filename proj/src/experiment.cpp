#include "gridid/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridid/rng.hpp"

namespace gridid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kApproxNoiseLevel = 1e-3;

int method_index(const std::string& method) {
  for (size_t i = 0; i < kMethodNames.size(); ++i)
    if (kMethodNames[i] == method) return static_cast<int>(i);
  throw ConfigError("unknown method '" + method + "'");
}

bool method_with_phase(const std::string& method) {
  return method.find("with_phase") != std::string::npos;
}

bool method_is_mle(const std::string& method) {
  return method.rfind("mle", 0) == 0;
}

std::string level_tag(size_t level_idx) {
  return "L" + std::to_string(level_idx);
}

json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

// Approximation-error tables shared by cmd_compare_approx and the metric row.
struct ApproxTables {
  double rrmse_p_lin, rrmse_q_lin, rrmse_p_adapted, rrmse_q_adapted;
  double mad_p_lin_mw, mad_q_lin_mvar, mad_p_ad_mw, mad_q_ad_mvar;
  double rrmse_i_re, rrmse_i_im;
};

ApproxTables compute_approx_tables(const Dataset& ds, double noise_level,
                                   uint64_t seed) {
  const NoiseSpec spec = NoiseSpec::from_level(noise_level);
  const int N = ds.truth.N(), n = static_cast<int>(ds.net.buses.size());
  const CMat yc = ds.y.complex_matrix();

  // Exact powers and currents at the true states.
  Mat p_exact(N, n), q_exact(N, n), ire_exact(N, n), iim_exact(N, n);
  for (int t = 0; t < N; ++t) {
    const auto& st = ds.truth.states[static_cast<size_t>(t)];
    p_exact.row(t) = ds.truth.injections[static_cast<size_t>(t)].p.transpose();
    q_exact.row(t) = ds.truth.injections[static_cast<size_t>(t)].q.transpose();
    CVec v(n);
    for (int h = 0; h < n; ++h) v[h] = std::polar(st.v[h], st.theta[h]);
    const CVec cur = yc * v;
    for (int h = 0; h < n; ++h) {
      ire_exact(t, h) = cur[h].real();
      iim_exact(t, h) = cur[h].imag();
    }
  }

  // Power models evaluated at the noisy measured states.
  const MeasurementSet wp = apply_noise(ds.truth, spec, true, seed);
  Mat p_lin(N, n), q_lin(N, n), p_ad(N, n), q_ad(N, n);
  for (int t = 0; t < N; ++t) {
    VoltageState st;
    st.v = wp.v_mag.row(t).transpose();
    st.theta = wp.theta.row(t).transpose();
    const Injections lin = linearized_powers(ds.y, st);
    const Injections ad = adapted_constraint_powers(ds.y, st);
    p_lin.row(t) = lin.p.transpose();
    q_lin.row(t) = lin.q.transpose();
    p_ad.row(t) = ad.p.transpose();
    q_ad.row(t) = ad.q.transpose();
  }

  // Current approximation from the phaseless measurements (same draws).
  MeasurementSet pl = apply_noise(ds.truth, spec, false, seed);
  derive_currents(pl);

  ApproxTables tab;
  tab.rrmse_p_lin = rrmse(p_lin, p_exact);
  tab.rrmse_q_lin = rrmse(q_lin, q_exact);
  tab.rrmse_p_adapted = rrmse(p_ad, p_exact);
  tab.rrmse_q_adapted = rrmse(q_ad, q_exact);
  tab.mad_p_lin_mw = mad(p_lin, p_exact) * ds.net.base_mva;
  tab.mad_q_lin_mvar = mad(q_lin, q_exact) * ds.net.base_mva;
  tab.mad_p_ad_mw = mad(p_ad, p_exact) * ds.net.base_mva;
  tab.mad_q_ad_mvar = mad(q_ad, q_exact) * ds.net.base_mva;
  tab.rrmse_i_re = rrmse(pl.i_re, ire_exact);
  tab.rrmse_i_im = rrmse(pl.i_im, iim_exact);
  return tab;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": config must be an object");
  ExperimentConfig cfg;
  try {
    cfg.network_path = j.at("network").get<std::string>();
    cfg.n_samples = j.value("n_samples", cfg.n_samples);
    cfg.sigma_load_rel = j.value("sigma_load_rel", cfg.sigma_load_rel);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("noise_levels"))
      cfg.noise_levels = j.at("noise_levels").get<std::vector<double>>();
    else
      cfg.noise_levels = {1e-4, 1e-3, 1e-2, 1e-1};
    if (j.contains("methods"))
      cfg.methods = j.at("methods").get<std::vector<std::string>>();
    else
      cfg.methods = kMethodNames;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  // Network paths are resolved relative to the config file.
  const fs::path base = fs::path(path).parent_path();
  if (!cfg.network_path.empty() && fs::path(cfg.network_path).is_relative())
    cfg.network_path = (base / cfg.network_path).string();
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.network_path.empty()) throw ConfigError("no network file given");
  if (cfg.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (cfg.sigma_load_rel < 0)
    throw ConfigError("sigma_load_rel must be >= 0");
  if (cfg.noise_levels.empty()) throw ConfigError("no noise levels given");
  for (double x : cfg.noise_levels)
    if (!(x >= 0.0 && x <= 0.1))
      throw ConfigError("noise level " + std::to_string(x) +
                        " outside [0, 0.1]");
  if (cfg.methods.empty()) throw ConfigError("no methods given");
  for (const auto& m : cfg.methods) method_index(m);
}

Dataset build_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  ds.net = load_network(cfg.network_path);
  ds.y = build_admittance(ds.net);
  const auto profiles = generate_load_profiles(
      ds.net, cfg.n_samples, cfg.sigma_load_rel, cfg.seed);
  const Vec slack_v =
      generate_slack_voltages(cfg.n_samples, kSigmaSlackRel, cfg.seed);
  ds.truth = synthesize_dataset(ds.net, profiles, slack_v, ds.y,
                                ds.net.slack_index());
  return ds;
}

MeasurementSet prepare_measurements(const Dataset& ds, double noise_level,
                                    bool with_phase, uint64_t seed) {
  MeasurementSet ms =
      apply_noise(ds.truth, NoiseSpec::from_level(noise_level), with_phase,
                  seed);
  derive_currents(ms);
  center(ms);
  return ms;
}

CMat run_method(const std::string& method, const Dataset& ds,
                double noise_level, uint64_t seed,
                EstimationResult* mle_result) {
  const bool wp = method_with_phase(method);
  MeasurementSet ms = prepare_measurements(ds, noise_level, wp, seed);
  if (method_is_mle(method)) {
    EstimatorConfig cfg;
    cfg.phase_mode = wp ? PhaseMode::WithPhase : PhaseMode::Phaseless;
    EstimationResult res = mle_estimate(ms, cfg);
    if (mle_result) *mle_result = res;
    return res.y_hat;
  }
  return lasso_estimate(ms, default_lambda_grid());
}

void cmd_generate(const ExperimentConfig& cfg) {
  const Dataset ds = build_dataset(cfg);
  ensure_dir(cfg.output_dir);
  const fs::path dir(cfg.output_dir);

  save_network(ds.net, (dir / "network.json").string());
  save_states_csv(ds.truth, (dir / "states.csv").string());

  json files = json::array();
  for (size_t li = 0; li < cfg.noise_levels.size(); ++li) {
    const double x = cfg.noise_levels[li];
    const NoiseSpec spec = NoiseSpec::from_level(x);
    const uint64_t seed_l = rng::child_seed(cfg.seed, li);
    const std::string f_wp =
        "measurements_" + level_tag(li) + "_withphase.csv";
    const std::string f_pl =
        "measurements_" + level_tag(li) + "_phaseless.csv";
    // Both files come from the same draws; the phaseless one just has no
    // theta column (magnitude-only metering of the same day).
    save_measurements_csv(apply_noise(ds.truth, spec, true, seed_l),
                          (dir / f_wp).string());
    save_measurements_csv(apply_noise(ds.truth, spec, false, seed_l),
                          (dir / f_pl).string());
    files.push_back({{"noise_level", x},
                     {"with_phase", f_wp},
                     {"phaseless", f_pl}});
  }

  json manifest = {
      {"seed", cfg.seed},
      {"n_samples", cfg.n_samples},
      {"sigma_load_rel", cfg.sigma_load_rel},
      {"sigma_slack_rel", kSigmaSlackRel},
      {"sigma_delta_inflation", 100.0},
      {"network", "network.json"},
      {"states", "states.csv"},
      {"noise_levels", cfg.noise_levels},
      {"methods", cfg.methods},
      {"measurements", files},
  };
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

void cmd_estimate(const std::string& dataset_dir, const std::string& method,
                  double noise_level, const std::string& out_dir) {
  method_index(method);
  const fs::path dir(dataset_dir);
  const json manifest = read_json_file((dir / "manifest.json").string());

  std::string meas_file;
  try {
    for (const auto& entry : manifest.at("measurements")) {
      if (entry.at("noise_level").get<double>() == noise_level) {
        meas_file = entry.at(method_with_phase(method) ? "with_phase"
                                                       : "phaseless")
                        .get<std::string>();
        break;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(dataset_dir + "/manifest.json: " + e.what());
  }
  if (meas_file.empty())
    throw ConfigError("noise level not present in the dataset manifest");

  MeasurementSet ms = load_measurements_csv((dir / meas_file).string());
  ms.noise = NoiseSpec::from_level(noise_level);
  ms.sigma_delta_inflation =
      manifest.value("sigma_delta_inflation", 100.0);
  attach_covariances(ms);
  derive_currents(ms);
  center(ms);

  const NetworkModel net = load_network(
      (dir / manifest.value("network", std::string("network.json")))
          .string());
  const CMat y_true = build_admittance(net).complex_matrix();

  ensure_dir(out_dir);
  const fs::path out(out_dir);

  CMat y_hat;
  std::ostringstream trace;
  trace << "iter,neg_log_likelihood\n";
  if (method_is_mle(method)) {
    EstimatorConfig ecfg;
    ecfg.phase_mode =
        method_with_phase(method) ? PhaseMode::WithPhase : PhaseMode::Phaseless;
    const EstimationResult res = mle_estimate(ms, ecfg);
    y_hat = res.y_hat;
    for (size_t i = 0; i < res.neg_log_likelihood_trace.size(); ++i)
      trace << i << ',' << fmt_g17(res.neg_log_likelihood_trace[i]) << '\n';
  } else {
    y_hat = lasso_estimate(ms, default_lambda_grid());
  }
  write_text_file((out / "trace.csv").string(), trace.str());
  save_matrix_csv(y_hat, (out / "y_hat.csv").string());

  MetricReport rep;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.rrmse_y = rrmse(y_hat, y_true);
  rep.sparsity_false_positives = sparsity_report(y_hat, y_true, 1e-3).first;
  rep.rrmse_p_lin = rep.rrmse_q_lin = rep.rrmse_p_adapted =
      rep.rrmse_q_adapted = nan;
  rep.mad_p = rep.mad_q = rep.rrmse_i_re = rep.rrmse_i_im = nan;
  write_text_file((out / "metrics.csv").string(),
                  MetricReport::csv_header() + "\n" + rep.csv_row() + "\n");
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg) {
  const Dataset ds = build_dataset(cfg);
  const CMat y_true = ds.y.complex_matrix();
  std::vector<SweepRow> rows;
  for (size_t li = 0; li < cfg.noise_levels.size(); ++li) {
    for (const auto& method : cfg.methods) {
      SweepRow row;
      row.noise_level = cfg.noise_levels[li];
      row.method = method;
      // Cell index over the full canonical grid, so a cell's seed doesn't
      // depend on which other cells are requested.
      const uint64_t cell =
          li * kMethodNames.size() +
          static_cast<uint64_t>(method_index(method));
      try {
        const CMat y_hat =
            run_method(method, ds, row.noise_level,
                       rng::child_seed(cfg.seed, cell), nullptr);
        row.rrmse_y = rrmse(y_hat, y_true);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        std::cerr << "sweep cell (" << row.noise_level << ", " << method
                  << ") failed: " << e.what() << "\n";
      }
      rows.push_back(row);
    }
  }
  ensure_dir(cfg.output_dir);
  save_sweep_csv(rows, (fs::path(cfg.output_dir) / "sweep.csv").string());
  return rows;
}

void cmd_compare_approx(const ExperimentConfig& cfg) {
  const Dataset ds = build_dataset(cfg);
  const ApproxTables tab =
      compute_approx_tables(ds, kApproxNoiseLevel, cfg.seed);
  ensure_dir(cfg.output_dir);
  const fs::path dir(cfg.output_dir);

  std::ostringstream p;
  p << "quantity,model,rrmse,mad\n";
  p << "p,linearized," << fmt_g17(tab.rrmse_p_lin) << ','
    << fmt_g17(tab.mad_p_lin_mw) << '\n';
  p << "p,adapted," << fmt_g17(tab.rrmse_p_adapted) << ','
    << fmt_g17(tab.mad_p_ad_mw) << '\n';
  p << "q,linearized," << fmt_g17(tab.rrmse_q_lin) << ','
    << fmt_g17(tab.mad_q_lin_mvar) << '\n';
  p << "q,adapted," << fmt_g17(tab.rrmse_q_adapted) << ','
    << fmt_g17(tab.mad_q_ad_mvar) << '\n';
  write_text_file((dir / "approx_powers.csv").string(), p.str());

  std::ostringstream c;
  c << "part,rrmse\n";
  c << "re," << fmt_g17(tab.rrmse_i_re) << '\n';
  c << "im," << fmt_g17(tab.rrmse_i_im) << '\n';
  write_text_file((dir / "approx_currents.csv").string(), c.str());
}

}  // namespace gridid
