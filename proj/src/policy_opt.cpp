#include "sdec/policy_opt.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "sdec/rng.hpp"

namespace sdec {

namespace {

Eigen::Index sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs(i);
    if (u < cum) return i;
  }
  return probs.size() - 1;  // guards against cum < 1 from rounding
}

// Feature rows for every grid action at a fixed state, reward column last.
Eigen::MatrixXd featurize_actions(const FeatureMap& features,
                                  const EnvModel& env, const ActionGrid& grid,
                                  const Eigen::VectorXd& s) {
  Eigen::MatrixXd s_rows(grid.size(), s.size());
  s_rows.rowwise() = s.transpose();
  return featurize_batch(features, env, s_rows, grid.actions);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

}  // namespace

ActionGrid make_action_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            int points_per_dim) {
  const Eigen::Index dims = lo.size();
  if (hi.size() != dims || dims == 0) {
    throw std::invalid_argument("make_action_grid: bad bounds");
  }
  if ((hi - lo).minCoeff() < 0.0) {
    throw std::invalid_argument("make_action_grid: hi must dominate lo");
  }
  if (points_per_dim < 1) {
    throw std::invalid_argument("make_action_grid: need at least one point");
  }
  Eigen::Index total = 1;
  for (Eigen::Index k = 0; k < dims; ++k) total *= points_per_dim;

  Eigen::MatrixXd levels(points_per_dim, dims);
  for (Eigen::Index k = 0; k < dims; ++k) {
    if (points_per_dim == 1) {
      levels(0, k) = 0.5 * (lo(k) + hi(k));
    } else {
      for (int i = 0; i < points_per_dim; ++i) {
        levels(i, k) = lo(k) + (hi(k) - lo(k)) * i / (points_per_dim - 1);
      }
    }
  }
  ActionGrid grid;
  grid.actions.resize(total, dims);
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  for (Eigen::Index row = 0; row < total; ++row) {
    for (Eigen::Index k = 0; k < dims; ++k) {
      grid.actions(row, k) = levels(idx[static_cast<std::size_t>(k)], k);
    }
    for (Eigen::Index k = dims - 1; k >= 0; --k) {  // odometer, last dim fastest
      if (++idx[static_cast<std::size_t>(k)] < points_per_dim) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return grid;
}

Eigen::VectorXd policy_probs(const FeatureMap& features, const EnvModel& env,
                             const ActionGrid& grid,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& s) {
  return softmax(featurize_actions(features, env, grid, s) * theta);
}

EnvPolicy make_softmax_policy(const FeatureMap& features, const EnvModel& env,
                              const ActionGrid& grid, Eigen::VectorXd theta) {
  return [&features, &env, &grid, theta = std::move(theta)](
             const Eigen::VectorXd& s, int /*t*/, Rng& rng) -> Eigen::VectorXd {
    const Eigen::VectorXd probs = policy_probs(features, env, grid, theta, s);
    return grid.actions.row(sample_categorical(probs, rng)).transpose();
  };
}

double advantage(const FeatureMap& features, const EnvModel& env,
                 const ActionGrid& grid, const Eigen::VectorXd& theta,
                 const QWeights& qw, const Eigen::VectorXd& s,
                 const Eigen::VectorXd& a) {
  const Eigen::MatrixXd phi = featurize_actions(features, env, grid, s);
  const Eigen::VectorXd q_all = phi * qw.w;
  const Eigen::VectorXd probs = softmax(phi * theta);
  return q_value(qw, features, env, s, a) - probs.dot(q_all);
}

EvalStats evaluate_policy(const FeatureMap& features, const EnvModel& env,
                          const ActionGrid& grid, const Eigen::VectorXd& theta,
                          int episodes, Rng& rng) {
  const EnvPolicy policy = make_softmax_policy(features, env, grid, theta);
  return evaluate_env_policy(env, policy, episodes, rng);
}

void TrainConfig::validate() const {
  if (updates < 0) throw std::invalid_argument("TrainConfig: updates < 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("TrainConfig: gamma must lie in [0, 1)");
  }
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
  if (burn_in < 0) throw std::invalid_argument("TrainConfig: burn_in < 0");
  if (stride < 1) throw std::invalid_argument("TrainConfig: stride < 1");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every < 1");
  if (eval_episodes < 1) {
    throw std::invalid_argument("TrainConfig: eval_episodes < 1");
  }
  if (action_points < 1) {
    throw std::invalid_argument("TrainConfig: action_points < 1");
  }
  if (eta >= 0.0 && !std::isfinite(eta)) {
    throw std::invalid_argument("TrainConfig: eta must be finite");
  }
}

namespace {

// Conservative step size: scales the certified curvature by the squared
// feature growth bound, with a mild bonus for larger action sets.
double automatic_eta(const EnvModel& env, const FeatureMap& features,
                     Eigen::Index num_actions, double upsilon2) {
  const double growth = features.growth_bound(env.c_f);
  const double denom =
      growth * growth * static_cast<double>(features.dim() + 1);
  return 0.05 * std::max(upsilon2, 1e-12) / denom *
         std::sqrt(std::log(static_cast<double>(std::max<Eigen::Index>(num_actions, 2))));
}

}  // namespace

LearningCurve sdec_train(const EnvModel& env, const FeatureMap& features,
                         const TrainConfig& cfg, std::uint64_t master_seed) {
  cfg.validate();
  const ActionGrid grid =
      make_action_grid(env.action_lo, env.action_hi, cfg.action_points);
  LspeConfig lspe_cfg;
  lspe_cfg.gamma = cfg.gamma;
  lspe_cfg.iterations = cfg.lspe_iterations;
  lspe_cfg.ridge = cfg.lspe_ridge;

  LearningCurve curve;
  curve.theta = Eigen::VectorXd::Zero(features.dim() + 1);
  double eta = cfg.eta;
  std::int64_t sim_steps = 0;

  const auto record_at = [&](int update, const SampleBatch& batch) {
    const RegularityDiagnostics diag =
        regularity_diagnostics(batch, features, env, cfg.gamma);
    if (eta < 0.0) {
      eta = automatic_eta(env, features, grid.size(), diag.upsilon2);
    }
    Rng eval_rng = derive_stream(master_seed, "train-eval",
                                 static_cast<std::uint64_t>(update));
    const EvalStats stats = evaluate_policy(features, env, grid, curve.theta,
                                            cfg.eval_episodes, eval_rng);
    sim_steps += static_cast<std::int64_t>(cfg.eval_episodes) * env.horizon;
    curve.records.push_back({update, stats.mean, stats.stddev, diag.upsilon1,
                             diag.upsilon2,
                             static_cast<double>(sim_steps) * env.dt});
  };

  const auto collect = [&](int update) {
    const EnvPolicy policy =
        make_softmax_policy(features, env, grid, curve.theta);
    Rng batch_rng = derive_stream(master_seed, "train-batch",
                                  static_cast<std::uint64_t>(update));
    SampleBatch batch =
        collect_stationary_batch(env, policy, cfg.batch_size, cfg.burn_in,
                                 cfg.stride, batch_rng, "softmax");
    sim_steps += cfg.burn_in + static_cast<std::int64_t>(cfg.batch_size) * cfg.stride;
    return batch;
  };

  for (int k = 0; k < cfg.updates; ++k) {
    const SampleBatch batch = collect(k);
    if (k % cfg.eval_every == 0) record_at(k, batch);
    const QWeights qw = lspe(batch, features, env, lspe_cfg);
    if (!qw.w.allFinite()) {
      throw numerical_abort("sdec_train: LSPE produced non-finite weights");
    }
    if (eta < 0.0) {
      // Off-cadence resolution cannot happen (update 0 is always recorded),
      // but guard against future cadence changes.
      const RegularityDiagnostics diag =
          regularity_diagnostics(batch, features, env, cfg.gamma);
      eta = automatic_eta(env, features, grid.size(), diag.upsilon2);
    }
    curve.theta += eta * qw.w;
    if (!curve.theta.allFinite()) {
      throw numerical_abort("sdec_train: policy weights diverged");
    }
  }
  record_at(cfg.updates, collect(cfg.updates));
  curve.eta_used = eta < 0.0 ? 0.0 : eta;
  return curve;
}

TabularNpgResult npg_exact_tabular(const oracles::TabularMdp& mdp, double eta,
                                   int updates, const LspeConfig& cfg) {
  mdp.validate();
  if (updates < 0) throw std::invalid_argument("npg_exact_tabular: updates < 0");
  const Eigen::Index cells = mdp.num_cells();
  const Eigen::MatrixXd one_hot = Eigen::MatrixXd::Identity(cells, cells);
  const Eigen::VectorXd v_star =
      value_iteration(mdp).rowwise().maxCoeff();

  TabularNpgResult out;
  out.theta = Eigen::VectorXd::Zero(cells);
  out.gap.reserve(static_cast<std::size_t>(updates) + 1);

  const auto policy_from_theta = [&]() {
    Eigen::MatrixXd policy(mdp.num_states, mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s) {
      const auto logits =
          out.theta.segment(static_cast<Eigen::Index>(s) * mdp.num_actions,
                            mdp.num_actions);
      Eigen::ArrayXd p = (logits.array() - logits.maxCoeff()).exp();
      policy.row(s) = (p / p.sum()).transpose();
    }
    return policy;
  };

  Eigen::MatrixXd policy = policy_from_theta();
  const auto gap_of = [&](const Eigen::MatrixXd& pi) {
    const Eigen::VectorXd v =
        oracles::policy_value(oracles::tabular_policy_q(mdp, pi), pi);
    return (v_star - v).maxCoeff();
  };
  out.gap.push_back(gap_of(policy));
  for (int k = 0; k < updates; ++k) {
    const Eigen::VectorXd w = lspe_exact_tabular(mdp, policy, one_hot, cfg);
    out.theta += eta * w;
    if (!out.theta.allFinite()) {
      throw numerical_abort("npg_exact_tabular: weights diverged");
    }
    policy = policy_from_theta();
    out.gap.push_back(gap_of(policy));
  }
  return out;
}

Eigen::VectorXd lspe_tabular_sampled(const oracles::TabularMdp& mdp,
                                     const Eigen::MatrixXd& policy,
                                     Eigen::Index n, const LspeConfig& cfg,
                                     Rng& rng) {
  mdp.validate();
  if (n < 1) throw std::invalid_argument("lspe_tabular_sampled: n < 1");
  const Eigen::Index cells = mdp.num_cells();
  const Eigen::VectorXd nu = oracles::stationary_distribution(mdp, policy);

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, cells);
  Eigen::MatrixXd phi_next = Eigen::MatrixXd::Zero(n, cells);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index cell = sample_categorical(nu, rng);
    const int s = static_cast<int>(cell) / mdp.num_actions;
    const int a = static_cast<int>(cell) % mdp.num_actions;
    const Eigen::Index s_next = sample_categorical(
        mdp.transition[static_cast<std::size_t>(a)].row(s).transpose(), rng);
    const Eigen::Index a_next =
        sample_categorical(policy.row(s_next).transpose(), rng);
    phi(i, cell) = 1.0;
    phi_next(i, s_next * mdp.num_actions + a_next) = 1.0;
    r(i) = mdp.reward(s, a);
  }
  return lspe_solve(phi, r, phi_next, cfg);
}

}  // namespace sdec
