#include "sdec/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sdec/baselines.hpp"
#include "sdec/csv.hpp"
#include "sdec/envs.hpp"
#include "sdec/kernel.hpp"
#include "sdec/nystrom.hpp"
#include "sdec/policy_eval.hpp"
#include "sdec/policy_opt.hpp"
#include "sdec/random_features.hpp"
#include "sdec/rng.hpp"
#include "sdec/spectral_metrics.hpp"

namespace sdec {

namespace {

EnvModel configured_env(const RunConfig& cfg) {
  EnvModel env = make_env(cfg.env.name);
  env.sigma_noise = cfg.env.sigma;
  if (cfg.env.init_spread >= 0.0) env.init_spread = cfg.env.init_spread;
  env.noise_target = cfg.env.noise_target == "state"
                         ? NoiseTarget::kFullState
                         : NoiseTarget::kAccelCoords;
  return env;
}

KernelParams feature_params(const FeatureConfig& f, int d) {
  KernelParams params;
  params.sigma = f.sigma;
  params.alpha = f.alpha;
  params.d = d;
  return params;
}

// Reference kernel matched by each variant's Gram: the split kernel for
// paired-trig and Nystrom, the plain Gaussian of width 1/bandwidth for the
// phase-shifted features.
KernelParams reference_params(const FeatureConfig& f, int d) {
  KernelParams params = feature_params(f, d);
  if (f.variant == "phase") {
    params.alpha = 0.0;
    params.sigma = 1.0 / f.bandwidth;
  }
  return params;
}

// Draw `count` rows from the configured benchmark distribution mu.
Eigen::MatrixXd sample_mu(const BenchConfig& bench, const KernelParams& params,
                          int count, Rng& rng) {
  Eigen::MatrixXd points(count, bench.d);
  if (bench.mu == "p_alpha") {
    if (params.alpha <= 0.0) {
      throw ConfigError(
          "bench.mu: p_alpha sampling requires features.alpha > 0");
    }
    const double scale = params.sigma / params.alpha;
    for (Eigen::Index i = 0; i < points.size(); ++i) {
      points(i) = scale * rng.normal();
    }
  } else if (bench.mu == "gauss") {
    for (Eigen::Index i = 0; i < points.size(); ++i) {
      points(i) = bench.box * rng.normal();
    }
  } else {  // uniform
    for (Eigen::Index i = 0; i < points.size(); ++i) {
      points(i) = rng.uniform(-bench.box, bench.box);
    }
  }
  return points;
}

// Landmarks for env-driven Nystrom features: uniform over the state box,
// inflated to the 1/(1 - alpha^2)-scaled domain the split embedding queries.
Eigen::MatrixXd env_landmarks(const EnvModel& env, double alpha, int count,
                              Rng& rng) {
  const double inflate = alpha > 0.0 ? 1.0 / (1.0 - alpha * alpha) : 1.0;
  Eigen::MatrixXd points(count, env.state_dim);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int j = 0; j < env.state_dim; ++j) {
      points(i, j) = inflate * rng.uniform(env.state_lo(j), env.state_hi(j));
    }
  }
  return points;
}

std::unique_ptr<FeatureMap> build_env_features(const RunConfig& cfg,
                                               const EnvModel& env) {
  const KernelParams params = feature_params(cfg.features, env.state_dim);
  Rng rng = derive_stream(cfg.seed, "features", 0);
  if (cfg.features.variant == "rff") {
    return std::make_unique<RandomFourierFeatures>(sample_random_features(
        params, cfg.features.m, RfVariant::kPairedTrig, 0.0, rng));
  }
  if (cfg.features.variant == "phase") {
    return std::make_unique<RandomFourierFeatures>(
        sample_random_features(params, cfg.features.m, RfVariant::kPhaseShifted,
                               cfg.features.bandwidth, rng));
  }
  Rng land_rng = derive_stream(cfg.seed, "landmarks", 0);
  const Eigen::MatrixXd landmarks =
      env_landmarks(env, params.alpha, cfg.features.n_nys, land_rng);
  return std::make_unique<NystromFeatures>(
      build_nystrom(params, landmarks, cfg.features.m).map);
}

// Runs fn(0..tasks-1), possibly on worker threads. Each task must derive its
// own rng streams and write only its own output slot, so the schedule cannot
// affect results.
void parallel_for(int tasks, const std::function<void(int)>& fn) {
  const int workers = worker_count(tasks);
  if (workers <= 1) {
    for (int i = 0; i < tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

std::uint64_t cell_stream_index(int m, int seed) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(seed)) << 32) |
         static_cast<std::uint32_t>(m);
}

CsvWriter run_decay_bench(const RunConfig& cfg) {
  const BenchConfig& bench = cfg.bench;
  const KernelParams params = feature_params(cfg.features, bench.d);
  if (params.alpha <= 0.0) {
    throw ConfigError("decay-bench requires features.alpha > 0");
  }
  const int cells = static_cast<int>(bench.m_values.size()) * bench.seeds;
  std::vector<double> nystrom_err(static_cast<std::size_t>(cells));
  std::vector<double> rff_err(static_cast<std::size_t>(cells));

  parallel_for(cells, [&](int task) {
    const int mi = task / bench.seeds;
    const int seed = task % bench.seeds;
    const int m = bench.m_values[static_cast<std::size_t>(mi)];
    const std::uint64_t index = cell_stream_index(m, seed);

    Rng land_rng = derive_stream(cfg.seed, "decay-landmarks", index);
    const Eigen::MatrixXd landmarks = sample_mu(bench, params, m, land_rng);
    const NystromFeatureMap nys = build_nystrom(params, landmarks, m).map;
    Rng eval_rng = derive_stream(cfg.seed, "decay-eval", index);
    const Eigen::MatrixXd eval_points =
        sample_mu(bench, params, bench.pairs, eval_rng);
    nystrom_err[static_cast<std::size_t>(task)] = kernel_approx_error(
        [&](const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& y) {
          return nystrom_kernel_estimate(nys, x, y);
        },
        params, eval_points);

    Rng rf_rng = derive_stream(cfg.seed, "decay-rff", index);
    const RandomFeatureMap rf =
        sample_random_features(params, m, RfVariant::kPairedTrig, 0.0, rf_rng);
    Rng pair_rng = derive_stream(cfg.seed, "decay-pairs", index);
    const Eigen::MatrixXd xs = sample_mu(bench, params, bench.pairs, pair_rng);
    const Eigen::MatrixXd ys = sample_mu(bench, params, bench.pairs, pair_rng);
    rff_err[static_cast<std::size_t>(task)] = kernel_pair_mae(
        [&](const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& y) {
          return rf_kernel_estimate(rf, x, y);
        },
        params, xs, ys);
  });

  CsvWriter csv({"method", "m", "n_nys", "seed", "kernel_approx_error"});
  for (std::size_t mi = 0; mi < bench.m_values.size(); ++mi) {
    for (int seed = 0; seed < bench.seeds; ++seed) {
      const int m = bench.m_values[mi];
      const std::size_t task = mi * static_cast<std::size_t>(bench.seeds) +
                               static_cast<std::size_t>(seed);
      csv.add_row({"nystrom", CsvWriter::format(m), CsvWriter::format(m),
                   CsvWriter::format(seed),
                   CsvWriter::format(nystrom_err[task])});
    }
  }
  for (std::size_t mi = 0; mi < bench.m_values.size(); ++mi) {
    for (int seed = 0; seed < bench.seeds; ++seed) {
      const int m = bench.m_values[mi];
      const std::size_t task = mi * static_cast<std::size_t>(bench.seeds) +
                               static_cast<std::size_t>(seed);
      csv.add_row({"rff", CsvWriter::format(m), CsvWriter::format(0),
                   CsvWriter::format(seed), CsvWriter::format(rff_err[task])});
    }
  }
  return csv;
}

CsvWriter run_features_bench(const RunConfig& cfg) {
  const BenchConfig& bench = cfg.bench;
  const FeatureConfig& fc = cfg.features;
  const KernelParams params = feature_params(fc, bench.d);
  const KernelParams ref = reference_params(fc, bench.d);
  if (fc.variant != "phase" && params.alpha <= 0.0) {
    throw ConfigError("features-bench: this variant requires features.alpha > 0");
  }
  const int cells = static_cast<int>(bench.m_values.size()) * bench.seeds;
  std::vector<double> mae(static_cast<std::size_t>(cells));
  std::vector<double> p95(static_cast<std::size_t>(cells));

  parallel_for(cells, [&](int task) {
    const int mi = task / bench.seeds;
    const int seed = task % bench.seeds;
    const int m = bench.m_values[static_cast<std::size_t>(mi)];
    const std::uint64_t index = cell_stream_index(m, seed);

    KernelEstimator estimator;
    NystromFeatureMap nys;
    RandomFeatureMap rf;
    if (fc.variant == "nystrom") {
      Rng land_rng = derive_stream(cfg.seed, "bench-landmarks", index);
      const int n_nys = std::max(fc.n_nys, m);
      const Eigen::MatrixXd landmarks =
          sample_mu(bench, params, n_nys, land_rng);
      nys = build_nystrom(params, landmarks, m).map;
      estimator = [&nys](const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y) {
        return nystrom_kernel_estimate(nys, x, y);
      };
    } else {
      Rng rf_rng = derive_stream(cfg.seed, "bench-features", index);
      rf = sample_random_features(params, m,
                                  fc.variant == "phase"
                                      ? RfVariant::kPhaseShifted
                                      : RfVariant::kPairedTrig,
                                  fc.bandwidth, rf_rng);
      estimator = [&rf](const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
        return rf_kernel_estimate(rf, x, y);
      };
    }
    Rng pair_rng = derive_stream(cfg.seed, "bench-pairs", index);
    const Eigen::MatrixXd xs = sample_mu(bench, params, bench.pairs, pair_rng);
    const Eigen::MatrixXd ys = sample_mu(bench, params, bench.pairs, pair_rng);
    std::vector<double> errs;
    errs.reserve(static_cast<std::size_t>(bench.pairs));
    for (int i = 0; i < bench.pairs; ++i) {
      const double truth = k_alpha(ref, xs.row(i).transpose(),
                                   ys.row(i).transpose());
      errs.push_back(std::abs(
          estimator(xs.row(i).transpose(), ys.row(i).transpose()) - truth));
    }
    double total = 0.0;
    for (double e : errs) total += e;
    mae[static_cast<std::size_t>(task)] = total / bench.pairs;
    std::sort(errs.begin(), errs.end());
    const std::size_t at = static_cast<std::size_t>(
        std::min<double>(errs.size() - 1.0, std::ceil(0.95 * errs.size()) - 1));
    p95[static_cast<std::size_t>(task)] = errs[at];
  });

  CsvWriter csv({"variant", "m", "seed", "pair_mae", "abs_error_p95"});
  for (std::size_t mi = 0; mi < bench.m_values.size(); ++mi) {
    for (int seed = 0; seed < bench.seeds; ++seed) {
      const std::size_t task = mi * static_cast<std::size_t>(bench.seeds) +
                               static_cast<std::size_t>(seed);
      csv.add_row({fc.variant, CsvWriter::format(bench.m_values[mi]),
                   CsvWriter::format(seed), CsvWriter::format(mae[task]),
                   CsvWriter::format(p95[task])});
    }
  }
  return csv;
}

CsvWriter run_train(const RunConfig& cfg, nlohmann::ordered_json& extra) {
  const EnvModel env = configured_env(cfg);
  const std::unique_ptr<FeatureMap> features = build_env_features(cfg, env);
  const LearningCurve curve = sdec_train(env, *features, cfg.train, cfg.seed);
  CsvWriter csv({"k", "mean_reward", "std", "upsilon1", "upsilon2", "seconds"});
  for (const CurveRecord& rec : curve.records) {
    csv.add_row({CsvWriter::format(rec.update),
                 CsvWriter::format(rec.mean_return),
                 CsvWriter::format(rec.std_return),
                 CsvWriter::format(rec.upsilon1),
                 CsvWriter::format(rec.upsilon2),
                 CsvWriter::format(rec.sim_seconds)});
  }
  extra["eta_used"] = curve.eta_used;
  return csv;
}

CsvWriter run_eval_baseline(const RunConfig& cfg, nlohmann::ordered_json& extra) {
  const EnvModel env = configured_env(cfg);
  const BaselineConfig& bc = cfg.baseline;
  EnvPolicy policy;
  if (bc.name == "energy") {
    if (cfg.env.name != "pendulum") {
      throw ConfigError("baseline.name: the energy baseline needs env pendulum");
    }
    policy = make_energy_swingup_policy(env);
  } else if (bc.name == "zero") {
    policy = make_zero_policy(env);
  } else if (bc.name == "uniform") {
    policy = make_uniform_policy(env);
  } else {  // ilqr
    const int horizon = bc.ilqr_horizon > 0 ? bc.ilqr_horizon : env.horizon;
    IlqrConfig icfg;
    icfg.max_iterations = bc.ilqr_iterations;
    const Eigen::VectorXd a_mid = 0.5 * (env.action_lo + env.action_hi);
    Eigen::MatrixXd u_init(horizon, env.action_dim);
    u_init.rowwise() = a_mid.transpose();
    const IlqrSolution solution =
        ilqr_solve(env, env.init_nominal, u_init, icfg);
    extra["ilqr_converged"] = solution.converged;
    extra["ilqr_final_cost"] = solution.cost_per_iteration.back();
    policy = make_ilqr_policy(env, solution);
  }
  const EvalStats stats = run_baseline(env, policy, bc.episodes, cfg.seed);
  CsvWriter csv({"baseline", "episodes", "mean_return", "std_return"});
  csv.add_row({bc.name, CsvWriter::format(bc.episodes),
               CsvWriter::format(stats.mean), CsvWriter::format(stats.stddev)});
  return csv;
}

CsvWriter run_diagnostics(const RunConfig& cfg) {
  const EnvModel env = configured_env(cfg);
  const std::unique_ptr<FeatureMap> features = build_env_features(cfg, env);
  const DiagnosticsConfig& dc = cfg.diagnostics;
  const EnvPolicy uniform = make_uniform_policy(env);
  Rng batch_rng = derive_stream(cfg.seed, "diag-batch", 0);
  const SampleBatch batch =
      collect_stationary_batch(env, uniform, dc.batch_size, dc.burn_in,
                               dc.stride, batch_rng, "uniform");
  const RegularityDiagnostics reg =
      regularity_diagnostics(batch, *features, env, dc.gamma);

  // Eigendecay of the reference-kernel Gram over a prefix of the batch's
  // deterministic next states.
  const int points = std::min<int>(dc.gram_points,
                                   static_cast<int>(batch.size()));
  const KernelParams ref = reference_params(cfg.features, env.state_dim);
  Eigen::MatrixXd f_vals(points, env.state_dim);
  for (int i = 0; i < points; ++i) {
    f_vals.row(i) = f_eval(env, batch.s.row(i).transpose(),
                           batch.a.row(i).transpose())
                        .transpose();
  }
  Eigen::MatrixXd gram(points, points);
  for (int i = 0; i < points; ++i) {
    for (int j = i; j < points; ++j) {
      gram(i, j) = gram(j, i) =
          k_alpha(ref, f_vals.row(i).transpose(), f_vals.row(j).transpose());
    }
  }
  const DecayFit fit = eigendecay_fit(sym_eigen_descending(gram), points,
                                      {0.5, 1.0, 1.5, 2.0, 3.0, 4.0});

  CsvWriter csv({"env", "variant", "m", "upsilon1", "upsilon2", "decay_beta",
                 "decay_h", "decay_r2"});
  csv.add_row({env.name, cfg.features.variant,
               CsvWriter::format(cfg.features.m),
               CsvWriter::format(reg.upsilon1), CsvWriter::format(reg.upsilon2),
               CsvWriter::format(fit.slope), CsvWriter::format(fit.h),
               CsvWriter::format(fit.r_squared)});
  return csv;
}

}  // namespace

int worker_count(int tasks) {
  const char* raw = std::getenv("SDEC_THREADS");
  int workers = 1;
  if (raw != nullptr) {
    char* end = nullptr;
    const long parsed = std::strtol(raw, &end, 10);
    if (end != raw && *end == '\0' && parsed > 0) {
      workers = static_cast<int>(std::min<long>(parsed, 1 << 20));
    }
  }
  return std::clamp(workers, 1, std::max(tasks, 1));
}

RunResult run(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out);
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  CsvWriter csv = [&] {
    if (cfg.command == "decay-bench") return run_decay_bench(cfg);
    if (cfg.command == "features-bench") return run_features_bench(cfg);
    if (cfg.command == "train") return run_train(cfg, extra);
    if (cfg.command == "eval-baseline") return run_eval_baseline(cfg, extra);
    return run_diagnostics(cfg);
  }();

  RunResult result;
  result.csv_path = cfg.out + "/" + cfg.command + ".csv";
  result.json_path = cfg.out + "/" + cfg.command + ".json";
  csv.write(result.csv_path);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  nlohmann::ordered_json sidecar;
  sidecar["config"] = nlohmann::ordered_json::parse(serialize_config(cfg));
  sidecar["version"] = kVersion;
  sidecar["wall_time_seconds"] = wall;
  for (auto& item : extra.items()) sidecar[item.key()] = item.value();
  std::ofstream json_file(result.json_path, std::ios::binary);
  if (!json_file) {
    throw std::runtime_error("run: cannot open " + result.json_path);
  }
  json_file << sidecar.dump(2) << "\n";
  return result;
}

}  // namespace sdec
