#include "sdec/spectral_metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sdec {
namespace {

struct Ols {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

Ols least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw std::invalid_argument("least_squares: need >= 2 points");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("least_squares: degenerate x");
  Ols out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return out;
}

}  // namespace

double kernel_approx_error(const KernelEstimator& k_hat,
                           const KernelParams& params,
                           const Eigen::MatrixXd& points) {
  params.validate();
  if (points.rows() < 1)
    throw std::invalid_argument("kernel_approx_error: no evaluation points");
  if (points.cols() != params.d)
    throw std::invalid_argument("kernel_approx_error: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd x = points.row(i).transpose();
    const double defect = k_alpha(params, x, x) - k_hat(x, x);
    acc += std::sqrt(std::max(0.0, defect));
  }
  return acc / static_cast<double>(points.rows());
}

double kernel_pair_mae(const KernelEstimator& k_hat, const KernelParams& params,
                       const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
  params.validate();
  if (xs.rows() != ys.rows() || xs.rows() < 1)
    throw std::invalid_argument("kernel_pair_mae: row-paired points required");
  if (xs.cols() != params.d || ys.cols() != params.d)
    throw std::invalid_argument("kernel_pair_mae: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const Eigen::VectorXd x = xs.row(i).transpose();
    const Eigen::VectorXd y = ys.row(i).transpose();
    acc += std::abs(k_hat(x, y) - k_alpha(params, x, y));
  }
  return acc / static_cast<double>(xs.rows());
}

DecayFit eigendecay_fit(const GramEigen& eigen, int n,
                        const std::vector<double>& h_grid) {
  if (n < 1) throw std::invalid_argument("eigendecay_fit: n must be >= 1");
  if (h_grid.empty())
    throw std::invalid_argument("eigendecay_fit: empty h grid");
  std::vector<double> log_ratio;
  for (Eigen::Index j = 0; j < eigen.eigenvalues.size(); ++j) {
    const double v = eigen.eigenvalues(j);
    if (v > 0.0) log_ratio.push_back(std::log(v / n));
  }
  if (log_ratio.size() < 4)
    throw std::invalid_argument(
        "eigendecay_fit: need at least 4 strictly positive eigenvalues");

  DecayFit best;
  best.r_squared = -1.0;
  for (double h : h_grid) {
    if (!(h > 0.0)) throw std::invalid_argument("eigendecay_fit: h must be > 0");
    std::vector<double> x(log_ratio.size());
    for (std::size_t j = 0; j < log_ratio.size(); ++j)
      x[j] = -std::pow(static_cast<double>(j + 1), 1.0 / h);
    const Ols fit = least_squares(x, log_ratio);
    if (fit.r_squared > best.r_squared) {
      best.model = DecayFit::Model::kStretchedExponential;
      best.slope = fit.slope;
      best.intercept = fit.intercept;
      best.r_squared = fit.r_squared;
      best.h = h;
    }
  }
  return best;
}

DecayFit fit_power_law(const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("fit_power_law: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0 && ys[i] > 0.0))
      throw std::invalid_argument("fit_power_law: samples must be positive");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const Ols fit = least_squares(lx, ly);
  DecayFit out;
  out.model = DecayFit::Model::kPowerLawInIndex;
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.r_squared = fit.r_squared;
  out.h = 1.0;
  return out;
}

}  // namespace sdec
