#pragma once

#include <Eigen/Core>

namespace sdec {

// Split Gaussian kernel family.
//
// A Gaussian transition density with mean f and covariance sigma^2 I_d
// factors, for any split parameter alpha in (0, 1), as
//
//   exp(-|s'-f|^2 / (2 s^2)) = exp(-a^2 |s'|^2 / (2 s^2))
//                            * exp(-|(1-a^2) s' - f|^2 / (2 s^2 (1-a^2)))
//                            * exp(+a^2 |f|^2 / (2 s^2 (1-a^2)))
//
// (s = sigma, a = alpha). The middle factor is a Gaussian kernel of bandwidth
// sigma/sqrt(1-alpha^2) between f and (1-alpha^2) s'; the first is absorbed
// into a base density p_alpha and the last is the growth term g_alpha. This
// split is what makes the transition operator representable with random or
// Nystrom features of the kernel.
struct KernelParams {
  double sigma = 1.0;  // base bandwidth, > 0
  double alpha = 0.5;  // split parameter, in [0, 1)
  int d = 1;           // dimension, >= 1

  // Throws std::invalid_argument when outside the ranges above.
  void validate() const;
};

// k_alpha(x, y) = exp(-(1 - alpha^2) |x - y|^2 / (2 sigma^2)), in (0, 1].
double k_alpha(const KernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y);

// g_alpha(v) = exp(alpha^2 |v|^2 / (2 (1 - alpha^2) sigma^2)), >= 1.
double g_alpha(const KernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& v);

// p_alpha(s') = alpha^d (2 pi sigma^2)^{-d/2} exp(-alpha^2 |s'|^2 / (2 sigma^2)),
// a Gaussian density with per-coordinate deviation sigma/alpha. Requires
// alpha > 0; at alpha = 0 the alpha^d factor degenerates, and callers should
// use transition_density_estimate, which keeps the prefactors combined.
double p_alpha(const KernelParams& p,
               const Eigen::Ref<const Eigen::VectorXd>& s_next);

struct FactorizationFactors {
  double base;    // exp(-alpha^2 |s'|^2 / (2 sigma^2))
  double kernel;  // exp(-|(1-alpha^2) s' - f|^2 / (2 sigma^2 (1-alpha^2)))
  double growth;  // exp(+alpha^2 |f|^2 / (2 sigma^2 (1-alpha^2)))
};

// The three factors above. Their product equals exp(-|s'-f|^2 / (2 sigma^2)).
// Requires alpha in (0, 1).
FactorizationFactors factorization_factors(
    const KernelParams& p, const Eigen::Ref<const Eigen::VectorXd>& f_val,
    const Eigen::Ref<const Eigen::VectorXd>& s_next);

// Growth bound sup_{|f| <= c_f} g_alpha(f) / alpha^d. Controls the worst-case
// feature magnitude, and through it the step-size scaling of the policy
// optimizer. Requires alpha in (0, 1), c_f >= 0.
double g_tilde_alpha(const KernelParams& p, double c_f);

}  // namespace sdec
