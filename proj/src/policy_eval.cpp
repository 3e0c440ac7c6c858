#include "sdec/policy_eval.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sdec/kernel.hpp"

namespace sdec {

namespace {

// Relative pivot floor below which a ridge-free normal-equation matrix is
// treated as singular.
constexpr double kPivotTolerance = 1e-12;

}  // namespace

Eigen::MatrixXd FeatureMap::psi_batch(const Eigen::MatrixXd& f_vals) const {
  Eigen::MatrixXd out(f_vals.rows(), dim());
  for (Eigen::Index i = 0; i < f_vals.rows(); ++i) {
    out.row(i) = psi(f_vals.row(i).transpose()).transpose();
  }
  return out;
}

double FeatureMap::growth_bound(double /*c_f*/) const { return 1.0; }

Eigen::VectorXd RandomFourierFeatures::psi(
    const Eigen::Ref<const Eigen::VectorXd>& f_val) const {
  if (map_.variant == RfVariant::kPairedTrig) {
    return eval_psi_rf(map_, f_val);
  }
  return eval_psi_phase(map_, f_val);
}

Eigen::MatrixXd RandomFourierFeatures::psi_batch(
    const Eigen::MatrixXd& f_vals) const {
  const Eigen::Index n = f_vals.rows();
  const Eigen::Index m = map_.num_frequencies();
  if (f_vals.cols() != map_.omega.cols()) {
    throw std::invalid_argument("psi_batch: f dimension mismatch");
  }
  if (map_.variant == RfVariant::kPhaseShifted) {
    Eigen::MatrixXd args = f_vals * map_.omega.transpose();
    args.rowwise() += map_.phase.transpose();
    return std::sqrt(2.0 / static_cast<double>(m)) * args.array().cos();
  }
  const KernelParams& p = map_.params;
  const double root = std::sqrt(1.0 - p.alpha * p.alpha);
  const double norm = std::pow(p.alpha, -p.d) / std::sqrt(static_cast<double>(m));
  const Eigen::MatrixXd args = (f_vals * map_.omega.transpose()) / root;
  Eigen::VectorXd pref(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pref(i) = norm * g_alpha(p, f_vals.row(i).transpose());
  }
  Eigen::MatrixXd out(n, 2 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    out.col(2 * j) = pref.array() * args.col(j).array().sin();
    out.col(2 * j + 1) = pref.array() * args.col(j).array().cos();
  }
  return out;
}

double RandomFourierFeatures::growth_bound(double c_f) const {
  if (map_.variant == RfVariant::kPhaseShifted) {
    return std::sqrt(2.0);  // sup |psi|: every entry is within sqrt(2/m)
  }
  return g_tilde_alpha(map_.params, c_f);
}

Eigen::VectorXd NystromFeatures::psi(
    const Eigen::Ref<const Eigen::VectorXd>& f_val) const {
  if (map_.params.alpha == 0.0) {
    return eval_varphi_nys(map_, f_val);
  }
  return eval_psi_nys(map_, f_val);
}

Eigen::MatrixXd NystromFeatures::psi_batch(const Eigen::MatrixXd& f_vals) const {
  const Eigen::Index n = f_vals.rows();
  const KernelParams& p = map_.params;
  const bool split = p.alpha > 0.0;
  const Eigen::MatrixXd& land = map_.landmarks;
  if (f_vals.cols() != land.cols()) {
    throw std::invalid_argument("psi_batch: f dimension mismatch");
  }
  const double arg_scale = split ? 1.0 / (1.0 - p.alpha * p.alpha) : 1.0;
  // Gram block k(landmark_i, arg_j) via the squared-distance expansion.
  const Eigen::MatrixXd args = arg_scale * f_vals;
  const Eigen::VectorXd land_sq = land.rowwise().squaredNorm();
  const Eigen::VectorXd args_sq = args.rowwise().squaredNorm();
  Eigen::MatrixXd sqdist = -2.0 * (land * args.transpose());
  sqdist.colwise() += land_sq;
  sqdist.rowwise() += args_sq.transpose();
  const double scale = -(1.0 - p.alpha * p.alpha) / (2.0 * p.sigma * p.sigma);
  const Eigen::MatrixXd gram =
      (scale * sqdist.array().max(0.0)).exp().matrix();  // n_nys x n
  Eigen::MatrixXd out =
      (map_.lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
       (map_.u_m.transpose() * gram))
          .transpose();  // n x rank
  if (split) {
    const double inv_alpha_d = std::pow(p.alpha, -p.d);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.row(i) *= inv_alpha_d * g_alpha(p, f_vals.row(i).transpose());
    }
  }
  return out;
}

double NystromFeatures::growth_bound(double c_f) const {
  // |varphi(x)| <= 1 for any x: it is a projection weighted by k(x, x) = 1.
  if (map_.params.alpha == 0.0) return 1.0;
  return g_tilde_alpha(map_.params, c_f);
}

Eigen::VectorXd featurize(const FeatureMap& features, const EnvModel& env,
                          const Eigen::Ref<const Eigen::VectorXd>& s,
                          const Eigen::Ref<const Eigen::VectorXd>& a) {
  Eigen::VectorXd out(features.dim() + 1);
  out.head(features.dim()) = features.psi(f_eval(env, s, a));
  out(features.dim()) = env_reward(env, s, a);
  return out;
}

Eigen::MatrixXd featurize_batch(const FeatureMap& features, const EnvModel& env,
                                const Eigen::MatrixXd& s_rows,
                                const Eigen::MatrixXd& a_rows) {
  const Eigen::Index n = s_rows.rows();
  if (a_rows.rows() != n) {
    throw std::invalid_argument("featurize_batch: row count mismatch");
  }
  Eigen::MatrixXd f_vals(n, env.state_dim);
  Eigen::VectorXd rewards(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd s = s_rows.row(i).transpose();
    const Eigen::VectorXd a = a_rows.row(i).transpose();
    f_vals.row(i) = f_eval(env, s, a).transpose();
    rewards(i) = env_reward(env, s, a);
  }
  Eigen::MatrixXd out(n, features.dim() + 1);
  out.leftCols(features.dim()) = features.psi_batch(f_vals);
  out.col(features.dim()) = rewards;
  return out;
}

int LspeConfig::resolve_iterations(Eigen::Index n) const {
  if (iterations >= 0) return iterations;
  const double t = std::ceil(5.0 * std::log10(static_cast<double>(std::max<Eigen::Index>(n, 10))));
  return static_cast<int>(t);
}

double LspeConfig::resolve_ridge(Eigen::Index n) const {
  if (ridge >= 0.0) return ridge;
  return 1e-6 * static_cast<double>(n);
}

void LspeConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("LspeConfig: gamma must lie in [0, 1)");
  }
  if (ridge >= 0.0 && !std::isfinite(ridge)) {
    throw std::invalid_argument("LspeConfig: ridge must be finite");
  }
}

namespace {

// Shared fixed-point driver: factor (gram + ridge I) once, then iterate
// w <- solve(rhs_const + gamma * cross * w).
Eigen::VectorXd lspe_iterate(const Eigen::MatrixXd& gram,
                             const Eigen::VectorXd& rhs_const,
                             const Eigen::MatrixXd& cross, double gamma,
                             double ridge, int iterations,
                             const char* rank_message) {
  const Eigen::Index dim = gram.rows();
  Eigen::MatrixXd reg = gram;
  reg.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> solver(reg);
  const auto& pivots = solver.vectorD();
  const double pivot_max = pivots.maxCoeff();
  const bool healthy = solver.info() == Eigen::Success && pivots.minCoeff() > 0.0;
  if (ridge == 0.0) {
    // Without a ridge the system must be genuinely full rank.
    if (!healthy || pivots.minCoeff() <= kPivotTolerance * pivot_max) {
      throw rank_deficiency_error(rank_message);
    }
  } else if (!healthy) {
    throw rank_deficiency_error(
        "lspe: regularized normal equations are numerically singular");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  for (int t = 0; t < iterations; ++t) {
    w = solver.solve(rhs_const + gamma * (cross * w));
  }
  return w;
}

}  // namespace

Eigen::VectorXd lspe_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& r,
                           const Eigen::MatrixXd& phi_next,
                           const LspeConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = phi.rows();
  const Eigen::Index dim = phi.cols();
  if (n == 0) throw std::invalid_argument("lspe_solve: empty batch");
  if (r.size() != n || phi_next.rows() != n || phi_next.cols() != dim) {
    throw std::invalid_argument("lspe_solve: shape mismatch");
  }
  if (n < dim) {
    std::clog << "lspe_solve: " << n << " samples for " << dim
              << " features; expect heavy reliance on the ridge term\n";
  }
  return lspe_iterate(
      phi.transpose() * phi, phi.transpose() * r, phi.transpose() * phi_next,
      cfg.gamma, cfg.resolve_ridge(n), cfg.resolve_iterations(n),
      "lspe_solve: singular normal equations with ridge = 0; pass ridge > 0");
}

QWeights lspe(const SampleBatch& batch, const FeatureMap& features,
              const EnvModel& env, const LspeConfig& cfg) {
  const Eigen::MatrixXd phi = featurize_batch(features, env, batch.s, batch.a);
  const Eigen::MatrixXd phi_next =
      featurize_batch(features, env, batch.s_next, batch.a_next);
  return QWeights{lspe_solve(phi, batch.r, phi_next, cfg), cfg.gamma};
}

double q_value(const QWeights& qw, const FeatureMap& features,
               const EnvModel& env, const Eigen::Ref<const Eigen::VectorXd>& s,
               const Eigen::Ref<const Eigen::VectorXd>& a) {
  return featurize(features, env, s, a).dot(qw.w);
}

Eigen::VectorXd lspe_exact_tabular(const oracles::TabularMdp& mdp,
                                   const Eigen::MatrixXd& policy,
                                   const Eigen::MatrixXd& feature_rows,
                                   const LspeConfig& cfg) {
  cfg.validate();
  const Eigen::Index cells =
      static_cast<Eigen::Index>(mdp.num_states) * mdp.num_actions;
  if (feature_rows.rows() != cells) {
    throw std::invalid_argument(
        "lspe_exact_tabular: feature_rows must have one row per (s, a) cell");
  }
  const Eigen::VectorXd nu = oracles::stationary_distribution(mdp, policy);
  const Eigen::MatrixXd chain = oracles::cell_chain(mdp, policy);
  Eigen::VectorXd r(cells);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      r(static_cast<Eigen::Index>(s) * mdp.num_actions + a) = mdp.reward(s, a);
    }
  }
  const Eigen::MatrixXd weighted = nu.asDiagonal() * feature_rows;
  const int iterations = cfg.iterations >= 0 ? cfg.iterations : 300;
  const double ridge = cfg.ridge >= 0.0 ? cfg.ridge : 0.0;
  return lspe_iterate(
      feature_rows.transpose() * weighted, weighted.transpose() * r,
      weighted.transpose() * (chain * feature_rows), cfg.gamma, ridge,
      iterations,
      "lspe_exact_tabular: singular population covariance; some cells carry "
      "no stationary mass (pass ridge > 0 or prune them)");
}

RegularityDiagnostics regularity_diagnostics(const Eigen::MatrixXd& phi,
                                             const Eigen::MatrixXd& phi_next,
                                             double gamma) {
  if (phi.rows() == 0 || phi.rows() != phi_next.rows() ||
      phi.cols() != phi_next.cols()) {
    throw std::invalid_argument("regularity_diagnostics: shape mismatch");
  }
  const double n = static_cast<double>(phi.rows());
  const Eigen::MatrixXd cov = (phi.transpose() * phi) / n;
  const Eigen::MatrixXd cross =
      (phi.transpose() * (phi - gamma * phi_next)) / n;
  const Eigen::MatrixXd sym = 0.5 * (cross + cross.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  RegularityDiagnostics out;
  es.compute(cov, Eigen::EigenvaluesOnly);
  out.upsilon1 = es.eigenvalues().minCoeff();
  es.compute(sym, Eigen::EigenvaluesOnly);
  out.upsilon2 = es.eigenvalues().minCoeff();
  return out;
}

RegularityDiagnostics regularity_diagnostics(const SampleBatch& batch,
                                             const FeatureMap& features,
                                             const EnvModel& env,
                                             double gamma) {
  return regularity_diagnostics(
      featurize_batch(features, env, batch.s, batch.a),
      featurize_batch(features, env, batch.s_next, batch.a_next), gamma);
}

}  // namespace sdec
