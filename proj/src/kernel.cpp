#include "sdec/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdec {
namespace {

void check_dim(const KernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& v,
               const char* who) {
  if (v.size() != p.d)
    throw std::invalid_argument(std::string(who) + ": vector length " +
                                std::to_string(v.size()) +
                                " does not match d = " + std::to_string(p.d));
}

void require_positive_alpha(const KernelParams& p, const char* who) {
  if (p.alpha <= 0.0)
    throw std::domain_error(std::string(who) +
                            ": alpha = 0 degenerates the alpha^d prefactor; "
                            "use transition_density_estimate instead");
}

}  // namespace

void KernelParams::validate() const {
  if (!(sigma > 0.0))
    throw std::invalid_argument("KernelParams: sigma must be > 0");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("KernelParams: alpha must be in [0, 1)");
  if (d < 1) throw std::invalid_argument("KernelParams: d must be >= 1");
}

double k_alpha(const KernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y) {
  p.validate();
  check_dim(p, x, "k_alpha");
  check_dim(p, y, "k_alpha");
  const double one_minus_a2 = 1.0 - p.alpha * p.alpha;
  return std::exp(-one_minus_a2 * (x - y).squaredNorm() /
                  (2.0 * p.sigma * p.sigma));
}

double g_alpha(const KernelParams& p,
               const Eigen::Ref<const Eigen::VectorXd>& v) {
  p.validate();
  check_dim(p, v, "g_alpha");
  const double a2 = p.alpha * p.alpha;
  return std::exp(a2 * v.squaredNorm() /
                  (2.0 * (1.0 - a2) * p.sigma * p.sigma));
}

double p_alpha(const KernelParams& p,
               const Eigen::Ref<const Eigen::VectorXd>& s_next) {
  p.validate();
  require_positive_alpha(p, "p_alpha");
  check_dim(p, s_next, "p_alpha");
  const double a2 = p.alpha * p.alpha;
  const double norm_const =
      std::pow(p.alpha, p.d) *
      std::pow(2.0 * M_PI * p.sigma * p.sigma, -0.5 * p.d);
  return norm_const *
         std::exp(-a2 * s_next.squaredNorm() / (2.0 * p.sigma * p.sigma));
}

FactorizationFactors factorization_factors(
    const KernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& f_val,
    const Eigen::Ref<const Eigen::VectorXd>& s_next) {
  p.validate();
  require_positive_alpha(p, "factorization_factors");
  check_dim(p, f_val, "factorization_factors");
  check_dim(p, s_next, "factorization_factors");
  const double a2 = p.alpha * p.alpha;
  const double s2 = p.sigma * p.sigma;
  const double one_minus_a2 = 1.0 - a2;
  FactorizationFactors out;
  out.base = std::exp(-a2 * s_next.squaredNorm() / (2.0 * s2));
  out.kernel = std::exp(-(one_minus_a2 * s_next - f_val).squaredNorm() /
                        (2.0 * s2 * one_minus_a2));
  out.growth = std::exp(a2 * f_val.squaredNorm() / (2.0 * s2 * one_minus_a2));
  return out;
}

double g_tilde_alpha(const KernelParams& p, double c_f) {
  p.validate();
  require_positive_alpha(p, "g_tilde_alpha");
  if (c_f < 0.0) throw std::invalid_argument("g_tilde_alpha: c_f must be >= 0");
  const double a2 = p.alpha * p.alpha;
  return std::exp(a2 * c_f * c_f / (2.0 * (1.0 - a2) * p.sigma * p.sigma)) /
         std::pow(p.alpha, p.d);
}

}  // namespace sdec
