#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "sdec/kernel.hpp"
#include "sdec/nystrom.hpp"

namespace sdec {

using KernelEstimator = std::function<double(
    const Eigen::Ref<const Eigen::VectorXd>&,
    const Eigen::Ref<const Eigen::VectorXd>&)>;

// Mean over rows x of sqrt(max(0, k_alpha(x, x) - k_hat(x, x))): the
// pointwise RKHS projection defect of a low-rank kernel estimate.
double kernel_approx_error(const KernelEstimator& k_hat,
                           const KernelParams& params,
                           const Eigen::MatrixXd& points);

// Mean absolute kernel estimation error over row-paired points. The Monte
// Carlo counterpart of kernel_approx_error for unbiased feature maps whose
// diagonal is exact.
double kernel_pair_mae(const KernelEstimator& k_hat, const KernelParams& params,
                       const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys);

struct DecayFit {
  enum class Model { kPowerLawInIndex, kStretchedExponential };
  Model model = Model::kStretchedExponential;
  double slope = 0.0;      // decay rate beta (stretched) or log-log slope
  double intercept = 0.0;
  double r_squared = 0.0;
  double h = 1.0;          // stretch exponent, stretched model only
};

// Fits log(lambda_j / n) = intercept - slope * j^(1/h) for each h in h_grid
// over the strictly positive eigenvalues and returns the best fit by r^2.
// Requires at least 4 strictly positive eigenvalues.
DecayFit eigendecay_fit(const GramEigen& eigen, int n,
                        const std::vector<double>& h_grid);

// Ordinary least squares of log(y) on log(x) over positive samples; slope is
// the power-law exponent. Used for empirical convergence-rate checks.
DecayFit fit_power_law(const std::vector<double>& xs,
                       const std::vector<double>& ys);

}  // namespace sdec
