#pragma once

#include <Eigen/Core>

#include "sdec/kernel.hpp"
#include "sdec/rng.hpp"

namespace sdec {

// Random Fourier feature maps for the split Gaussian kernel.
//
// paired-trig: frequencies omega_i ~ N(0, sigma^-2 I_d). Feature pairs
//   (sin, cos)(omega_i' f / sqrt(1 - alpha^2)) scaled by g_alpha(f) / alpha^d
//   and 1/sqrt(m), so inner products are m-sample Monte Carlo averages.
//
// phase-shifted: omega_i ~ N(0, bandwidth^2 I_d), phases b_i ~ U[0, 2 pi).
//   Entries sqrt(2/m) cos(omega_i' f + b_i); the expected Gram is the
//   Gaussian kernel exp(-bandwidth^2 |x - y|^2 / 2).
enum class RfVariant { kPairedTrig, kPhaseShifted };

struct RandomFeatureMap {
  RfVariant variant = RfVariant::kPairedTrig;
  KernelParams params;
  double bandwidth = 1.0;  // phase-shifted only
  Eigen::MatrixXd omega;   // m x d, one frequency per row
  Eigen::VectorXd phase;   // m entries, phase-shifted only

  int num_frequencies() const { return static_cast<int>(omega.rows()); }
  // Feature vector length: 2m paired-trig, m phase-shifted.
  int feature_dim() const {
    return variant == RfVariant::kPairedTrig ? 2 * num_frequencies()
                                             : num_frequencies();
  }
};

// Draws m frequencies (and phases for the phase-shifted variant) from rng.
// bandwidth is ignored by the paired-trig variant.
RandomFeatureMap sample_random_features(const KernelParams& params, int m,
                                        RfVariant variant, double bandwidth,
                                        Rng& rng);

// Paired-trig embedding of a deterministic next state f. Entry layout is
// (sin_i, cos_i) at (2i, 2i+1) with argument omega_i' f / sqrt(1 - alpha^2),
// prefactor g_alpha(f) / (alpha^d sqrt(m)). Requires alpha in (0, 1); the
// prefactor degenerates at alpha = 0 (see transition_density_estimate for the
// combined form).
Eigen::VectorXd eval_psi_rf(const RandomFeatureMap& map,
                            const Eigen::Ref<const Eigen::VectorXd>& f_val);

// Phase-shifted embedding: entries sqrt(2/m) cos(omega_i' f + b_i).
Eigen::VectorXd eval_psi_phase(const RandomFeatureMap& map,
                               const Eigen::Ref<const Eigen::VectorXd>& f_val);

// Monte Carlo kernel estimate. Paired-trig:
// (1/m) sum_i cos(sqrt(1 - alpha^2) omega_i'(x - y)), an unbiased estimate of
// k_alpha(x, y). Phase-shifted: the feature inner product, unbiased for
// exp(-bandwidth^2 |x - y|^2 / 2).
double rf_kernel_estimate(const RandomFeatureMap& map,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y);

// Plug-in estimate of the Gaussian transition density N(s' | f, sigma^2 I):
//
//   (2 pi sigma^2)^{-d/2} exp(-alpha^2 |s'|^2 / (2 sigma^2))
//     * exp(alpha^2 |f|^2 / (2 (1-alpha^2) sigma^2))
//     * (1/m) sum_i cos(omega_i' f / sqrt(1-alpha^2)
//                       - sqrt(1-alpha^2) omega_i' s')
//
// which is the feature inner product (1/m) sum_i psi_i(f)' mu_i(s') with the
// alpha^d prefactors of psi and the base density combined, so alpha = 0 is
// supported. May be negative at finite m. Paired-trig maps only.
double transition_density_estimate(const RandomFeatureMap& map,
                                   const Eigen::Ref<const Eigen::VectorXd>& f_val,
                                   const Eigen::Ref<const Eigen::VectorXd>& s_next);

// Features for exponential-family conditional densities
// p(s'|s,a) = exp(f(s,a)' s' - A(s,a)) q(s'): entry pairs
// h [cos(omega_i' f), sin(omega_i' f)] / sqrt(m) with h = exp(A + |f|^2 / 2),
// layout (cos_i, sin_i) at (2i, 2i+1). Expects identity-covariance
// frequencies, so build the map with sigma = 1. log_partition is A(s,a).
Eigen::VectorXd exp_family_features(const RandomFeatureMap& map,
                                    const Eigen::Ref<const Eigen::VectorXd>& f_val,
                                    double log_partition);

}  // namespace sdec
