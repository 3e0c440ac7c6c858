#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "sdec/envs.hpp"
#include "sdec/policy_eval.hpp"

namespace sdec {

// Finite action set used by the softmax policy: an inclusive per-dimension
// linspace, expanded as a cartesian product (first dimension slowest).
struct ActionGrid {
  Eigen::MatrixXd actions;  // num_actions x action_dim

  Eigen::Index size() const { return actions.rows(); }
};

ActionGrid make_action_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            int points_per_dim);

// Softmax-in-features policy: pi(a | s) proportional to exp(featurize(s, a)' theta).
Eigen::VectorXd policy_probs(const FeatureMap& features, const EnvModel& env,
                             const ActionGrid& grid,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& s);

// EnvPolicy adapter sampling from policy_probs. The features, env, and grid
// are captured by reference and must outlive the returned policy.
EnvPolicy make_softmax_policy(const FeatureMap& features, const EnvModel& env,
                              const ActionGrid& grid, Eigen::VectorXd theta);

// Q(s, a) minus its mean over the policy's action distribution at s.
double advantage(const FeatureMap& features, const EnvModel& env,
                 const ActionGrid& grid, const Eigen::VectorXd& theta,
                 const QWeights& qw, const Eigen::VectorXd& s,
                 const Eigen::VectorXd& a);

EvalStats evaluate_policy(const FeatureMap& features, const EnvModel& env,
                          const ActionGrid& grid, const Eigen::VectorXd& theta,
                          int episodes, Rng& rng);

// Raised when a policy update produces non-finite weights.
struct numerical_abort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int updates = 50;        // number of natural-gradient steps
  double eta = -1.0;       // step size; < 0 selects the automatic rule
  double gamma = 0.99;
  int batch_size = 2000;   // transitions retained per update
  int burn_in = 200;       // stream-global transitions discarded up front
  int stride = 10;         // thinning between retained transitions
  int eval_every = 25;     // policy-evaluation cadence, in updates
  int eval_episodes = 100;
  int action_points = 15;  // grid points per action dimension
  int lspe_iterations = -1;
  double lspe_ridge = -1.0;

  void validate() const;
};

struct CurveRecord {
  int update = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double upsilon1 = 0.0;
  double upsilon2 = 0.0;
  // Deterministic simulated time consumed so far (env transitions times dt).
  double sim_seconds = 0.0;
};

struct LearningCurve {
  std::vector<CurveRecord> records;
  Eigen::VectorXd theta;
  double eta_used = 0.0;
};

// Natural policy gradient with an LSPE critic: repeat { collect a stationary
// on-policy batch, fit Q-weights, theta += eta * w }. Evaluation records are
// taken before the first update, on the eval_every cadence, and after the
// last update. All randomness derives from master_seed, so runs with equal
// configs and seeds match exactly.
LearningCurve sdec_train(const EnvModel& env, const FeatureMap& features,
                         const TrainConfig& cfg, std::uint64_t master_seed);

// Tabular counterpart on an explicit MDP with one-hot features and
// population-exact LSPE. Returns the optimality gap max_s(V*(s) - V_pi(s))
// after each update (entry 0 is the uniform policy).
struct TabularNpgResult {
  Eigen::VectorXd theta;  // one logit per (s, a) cell
  std::vector<double> gap;
};

TabularNpgResult npg_exact_tabular(const oracles::TabularMdp& mdp, double eta,
                                   int updates, const LspeConfig& cfg);

// Monte Carlo LSPE on a finite MDP: n cells drawn i.i.d. from the stationary
// distribution, successors from the transition law, one-hot features.
Eigen::VectorXd lspe_tabular_sampled(const oracles::TabularMdp& mdp,
                                     const Eigen::MatrixXd& policy,
                                     Eigen::Index n, const LspeConfig& cfg,
                                     Rng& rng);

}  // namespace sdec
