#include "sdec/random_features.hpp"

#include <cmath>
#include <stdexcept>

namespace sdec {
namespace {

void check_dim(const RandomFeatureMap& map,
               const Eigen::Ref<const Eigen::VectorXd>& v, const char* who) {
  if (v.size() != map.omega.cols())
    throw std::invalid_argument(std::string(who) + ": vector length " +
                                std::to_string(v.size()) + " does not match d = " +
                                std::to_string(map.omega.cols()));
}

void require_paired(const RandomFeatureMap& map, const char* who) {
  if (map.variant != RfVariant::kPairedTrig)
    throw std::invalid_argument(std::string(who) + ": needs a paired-trig map");
}

}  // namespace

RandomFeatureMap sample_random_features(const KernelParams& params, int m,
                                        RfVariant variant, double bandwidth,
                                        Rng& rng) {
  params.validate();
  if (m < 1) throw std::invalid_argument("sample_random_features: m must be >= 1");
  if (variant == RfVariant::kPhaseShifted && !(bandwidth > 0.0))
    throw std::invalid_argument("sample_random_features: bandwidth must be > 0");
  RandomFeatureMap map;
  map.variant = variant;
  map.params = params;
  map.bandwidth = bandwidth;
  map.omega.resize(m, params.d);
  const double scale =
      variant == RfVariant::kPairedTrig ? 1.0 / params.sigma : bandwidth;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < params.d; ++j) map.omega(i, j) = scale * rng.normal();
  if (variant == RfVariant::kPhaseShifted) {
    map.phase.resize(m);
    for (int i = 0; i < m; ++i) map.phase(i) = rng.uniform(0.0, 2.0 * M_PI);
  }
  return map;
}

Eigen::VectorXd eval_psi_rf(const RandomFeatureMap& map,
                            const Eigen::Ref<const Eigen::VectorXd>& f_val) {
  require_paired(map, "eval_psi_rf");
  check_dim(map, f_val, "eval_psi_rf");
  const KernelParams& p = map.params;
  if (p.alpha <= 0.0)
    throw std::domain_error(
        "eval_psi_rf: alpha = 0 degenerates the alpha^d prefactor; use "
        "transition_density_estimate for the combined form");
  const int m = map.num_frequencies();
  const double root = std::sqrt(1.0 - p.alpha * p.alpha);
  const double prefactor =
      g_alpha(p, f_val) / std::pow(p.alpha, p.d) / std::sqrt(double(m));
  const Eigen::VectorXd args = map.omega * f_val / root;
  Eigen::VectorXd psi(2 * m);
  for (int i = 0; i < m; ++i) {
    psi(2 * i) = prefactor * std::sin(args(i));
    psi(2 * i + 1) = prefactor * std::cos(args(i));
  }
  return psi;
}

Eigen::VectorXd eval_psi_phase(const RandomFeatureMap& map,
                               const Eigen::Ref<const Eigen::VectorXd>& f_val) {
  if (map.variant != RfVariant::kPhaseShifted)
    throw std::invalid_argument("eval_psi_phase: needs a phase-shifted map");
  check_dim(map, f_val, "eval_psi_phase");
  const int m = map.num_frequencies();
  const double scale = std::sqrt(2.0 / double(m));
  return (((map.omega * f_val) + map.phase).array().cos() * scale).matrix();
}

double rf_kernel_estimate(const RandomFeatureMap& map,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_dim(map, x, "rf_kernel_estimate");
  check_dim(map, y, "rf_kernel_estimate");
  if (map.variant == RfVariant::kPhaseShifted)
    return eval_psi_phase(map, x).dot(eval_psi_phase(map, y));
  const double root = std::sqrt(1.0 - map.params.alpha * map.params.alpha);
  const Eigen::VectorXd args = map.omega * (x - y) * root;
  return args.array().cos().mean();
}

double transition_density_estimate(
    const RandomFeatureMap& map, const Eigen::Ref<const Eigen::VectorXd>& f_val,
    const Eigen::Ref<const Eigen::VectorXd>& s_next) {
  require_paired(map, "transition_density_estimate");
  check_dim(map, f_val, "transition_density_estimate");
  check_dim(map, s_next, "transition_density_estimate");
  const KernelParams& p = map.params;
  const double a2 = p.alpha * p.alpha;
  const double s2 = p.sigma * p.sigma;
  const double root = std::sqrt(1.0 - a2);
  // alpha^d from the base density cancels against the psi prefactor, leaving
  // the plain Gaussian normalization; valid for alpha in [0, 1).
  const double prefactor =
      std::pow(2.0 * M_PI * s2, -0.5 * p.d) *
      std::exp(-a2 * s_next.squaredNorm() / (2.0 * s2)) *
      std::exp(a2 * f_val.squaredNorm() / (2.0 * (1.0 - a2) * s2));
  const Eigen::VectorXd args =
      map.omega * (f_val / root - root * s_next);
  return prefactor * args.array().cos().mean();
}

Eigen::VectorXd exp_family_features(const RandomFeatureMap& map,
                                    const Eigen::Ref<const Eigen::VectorXd>& f_val,
                                    double log_partition) {
  require_paired(map, "exp_family_features");
  check_dim(map, f_val, "exp_family_features");
  const int m = map.num_frequencies();
  const double h =
      std::exp(log_partition + 0.5 * f_val.squaredNorm()) / std::sqrt(double(m));
  const Eigen::VectorXd args = map.omega * f_val;
  Eigen::VectorXd psi(2 * m);
  for (int i = 0; i < m; ++i) {
    psi(2 * i) = h * std::cos(args(i));
    psi(2 * i + 1) = h * std::sin(args(i));
  }
  return psi;
}

}  // namespace sdec
