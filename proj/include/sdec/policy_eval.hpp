#pragma once

#include <Eigen/Core>

#include "sdec/envs.hpp"
#include "sdec/nystrom.hpp"
#include "sdec/oracles.hpp"
#include "sdec/random_features.hpp"

namespace sdec {

// Embedding of deterministic next states consumed by the critic and the
// policy. Implementations wrap the random-feature and Nystrom maps.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd psi(
      const Eigen::Ref<const Eigen::VectorXd>& f_val) const = 0;
  // Row-wise evaluation; overridden with matrix products where it pays off.
  virtual Eigen::MatrixXd psi_batch(const Eigen::MatrixXd& f_vals) const;
  // Bound on |psi| over |f| <= c_f, used by the default step-size rule.
  virtual double growth_bound(double c_f) const;
};

// Paired-trig or phase-shifted random Fourier features.
class RandomFourierFeatures final : public FeatureMap {
 public:
  explicit RandomFourierFeatures(RandomFeatureMap map) : map_(std::move(map)) {}
  int dim() const override { return map_.feature_dim(); }
  Eigen::VectorXd psi(
      const Eigen::Ref<const Eigen::VectorXd>& f_val) const override;
  Eigen::MatrixXd psi_batch(const Eigen::MatrixXd& f_vals) const override;
  double growth_bound(double c_f) const override;
  const RandomFeatureMap& map() const { return map_; }

 private:
  RandomFeatureMap map_;
};

// Nystrom features: the split embedding psi when alpha > 0, the plain
// projection varphi(f) when alpha = 0.
class NystromFeatures final : public FeatureMap {
 public:
  explicit NystromFeatures(NystromFeatureMap map) : map_(std::move(map)) {}
  int dim() const override { return map_.rank(); }
  Eigen::VectorXd psi(
      const Eigen::Ref<const Eigen::VectorXd>& f_val) const override;
  Eigen::MatrixXd psi_batch(const Eigen::MatrixXd& f_vals) const override;
  double growth_bound(double c_f) const override;
  const NystromFeatureMap& map() const { return map_; }

 private:
  NystromFeatureMap map_;
};

// State-action features [psi(f_eval(env, s, a)); reward(env, s, a)], length
// dim() + 1. The reward coordinate is always last.
Eigen::VectorXd featurize(const FeatureMap& features, const EnvModel& env,
                          const Eigen::Ref<const Eigen::VectorXd>& s,
                          const Eigen::Ref<const Eigen::VectorXd>& a);

// Row-wise featurize over paired (state, action) rows.
Eigen::MatrixXd featurize_batch(const FeatureMap& features, const EnvModel& env,
                                const Eigen::MatrixXd& s_rows,
                                const Eigen::MatrixXd& a_rows);

struct LspeConfig {
  double gamma = 0.99;
  // Fixed-point iterations; < 0 resolves to ceil(5 log10 n) (and to 300 for
  // the exact-expectation variant, which has no sample size). 0 is allowed
  // and returns the zero initialization unchanged.
  int iterations = -1;
  // Tikhonov weight on the normal equations; < 0 resolves to 1e-6 n for the
  // sampled solver and to 0 for the exact-expectation variant.
  double ridge = -1.0;

  int resolve_iterations(Eigen::Index n) const;
  double resolve_ridge(Eigen::Index n) const;
  void validate() const;
};

struct QWeights {
  Eigen::VectorXd w;  // featurize-dim entries; last multiplies the reward
  double gamma = 0.99;
};

// Least-squares policy evaluation on materialized feature matrices: from
// w_0 = 0, repeat w <- argmin_v |phi v - (r + gamma phi_next w)|^2 + ridge|v|^2.
// The normal-equation matrix is factored once (LLT). With ridge = 0 a
// singular system raises rank_deficiency_error suggesting a positive ridge.
Eigen::VectorXd lspe_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& r,
                           const Eigen::MatrixXd& phi_next,
                           const LspeConfig& cfg);

// LSPE over an on-policy batch, with features built by featurize.
QWeights lspe(const SampleBatch& batch, const FeatureMap& features,
              const EnvModel& env, const LspeConfig& cfg);

double q_value(const QWeights& qw, const FeatureMap& features,
               const EnvModel& env, const Eigen::Ref<const Eigen::VectorXd>& s,
               const Eigen::Ref<const Eigen::VectorXd>& a);

// Population-limit LSPE on a finite MDP: expectations are taken exactly
// under the stationary cell distribution of the policy. feature_rows is
// num_cells x D (identity for one-hot features). Returns the weight vector.
Eigen::VectorXd lspe_exact_tabular(const oracles::TabularMdp& mdp,
                                   const Eigen::MatrixXd& policy,
                                   const Eigen::MatrixXd& feature_rows,
                                   const LspeConfig& cfg);

// Smallest eigenvalue of the empirical feature covariance (upsilon1) and of
// the symmetric part of E[phi (phi - gamma phi_next)'] (upsilon2). Positive
// values certify that the LSPE fixed point is well conditioned.
struct RegularityDiagnostics {
  double upsilon1 = 0.0;
  double upsilon2 = 0.0;
};

// On explicit feature matrices (one transition per row).
RegularityDiagnostics regularity_diagnostics(const Eigen::MatrixXd& phi,
                                             const Eigen::MatrixXd& phi_next,
                                             double gamma);

// On an environment batch, with features built by featurize (so the reward
// coordinate participates).
RegularityDiagnostics regularity_diagnostics(const SampleBatch& batch,
                                             const FeatureMap& features,
                                             const EnvModel& env, double gamma);

}  // namespace sdec
