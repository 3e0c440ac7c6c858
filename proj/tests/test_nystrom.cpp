#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include "doctest.h"

#include "sdec/kernel.hpp"
#include "sdec/nystrom.hpp"
#include "sdec/rng.hpp"
#include "sdec/spectral_metrics.hpp"

using namespace sdec;

namespace {

Eigen::MatrixXd gaussian_cloud(int n, int d, std::uint64_t seed) {
  Rng rng = derive_stream(seed, "nys-test");
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
  return pts;
}

KernelEstimator wrap(const NystromFeatureMap& map) {
  return [&map](const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y) {
    return nystrom_kernel_estimate(map, x, y);
  };
}

}  // namespace

TEST_CASE("sym_eigen_descending on a known 2x2 matrix") {
  Eigen::MatrixXd sym(2, 2);
  sym << 2.0, 1.0, 1.0, 2.0;
  const GramEigen eig = sym_eigen_descending(sym);
  CHECK(eig.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(eig.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  CHECK(eig.u.col(0).cwiseAbs().isApproxToConstant(inv_root2, 1e-12));
  CHECK(eig.u.col(1).cwiseAbs().isApproxToConstant(inv_root2, 1e-12));
  CHECK((eig.u.transpose() * eig.u - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  const Eigen::MatrixXd rebuilt =
      eig.u * eig.eigenvalues.asDiagonal() * eig.u.transpose();
  CHECK((rebuilt - sym).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(sym_eigen_descending(-Eigen::MatrixXd::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("single landmark closed form") {
  const KernelParams p{1.0, 0.5, 1};
  const Eigen::MatrixXd landmark = Eigen::MatrixXd::Constant(1, 1, 0.3);
  const NystromBuild build = build_nystrom(p, landmark, 1);
  CHECK(build.map.lambda(0) == doctest::Approx(1.0));
  CHECK(build.map.u_m(0, 0) == doctest::Approx(1.0));
  CHECK(build.map.rank() == 1);
  CHECK_FALSE(build.map.truncated());

  // varphi(x) reduces to k(x0, x), so k_hat(x, y) = k(x, x0) k(x0, y).
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, -0.9);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.2);
  const Eigen::VectorXd x0 = landmark.row(0);
  CHECK(eval_varphi_nys(build.map, x)(0) ==
        doctest::Approx(k_alpha(p, x0, x)).epsilon(1e-12));
  CHECK(nystrom_kernel_estimate(build.map, x, y) ==
        doctest::Approx(k_alpha(p, x, x0) * k_alpha(p, x0, y)).epsilon(1e-12));
}

TEST_CASE("gram decomposition reconstructs the kernel matrix") {
  const KernelParams p{1.0, 0.0, 1};
  const Eigen::MatrixXd pts = gaussian_cloud(64, 1, 31);
  const NystromBuild build = build_nystrom(p, pts, 64);
  const GramEigen& eig = build.gram;
  Eigen::MatrixXd gram(64, 64);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      gram(i, j) = k_alpha(p, pts.row(i), pts.row(j));
  const Eigen::MatrixXd rebuilt =
      eig.u * eig.eigenvalues.asDiagonal() * eig.u.transpose();
  CHECK((rebuilt - gram).cwiseAbs().maxCoeff() <= 1e-8 * 64);

  for (Eigen::Index j = 0; j + 1 < eig.eigenvalues.size(); ++j)
    CHECK(eig.eigenvalues(j) >= eig.eigenvalues(j + 1));
  CHECK(eig.eigenvalues.minCoeff() >= 0.0);

  // A dense Gaussian cloud has fast spectral decay, so the requested rank 64
  // shrinks to the numerically supported one.
  CHECK(build.map.truncated());
  CHECK(build.map.rank() >= 8);
  CHECK(build.map.rank() <= 24);
  for (Eigen::Index j = 0; j + 1 < build.map.lambda.size(); ++j)
    CHECK(build.map.lambda(j) >= build.map.lambda(j + 1));
  CHECK(build.map.lambda.minCoeff() > 0.0);
}

TEST_CASE("landmark evaluation identities at full rank") {
  const KernelParams p{1.0, 0.5, 1};
  Eigen::MatrixXd landmarks(8, 1);
  landmarks.col(0) = Eigen::VectorXd::LinSpaced(8, -3.0, 3.0);
  const NystromBuild build = build_nystrom(p, landmarks, 8);
  REQUIRE_FALSE(build.map.truncated());

  // varphi_i(x_j) = sqrt(lambda_i) u(j, i).
  for (int j = 0; j < 8; ++j) {
    const Eigen::VectorXd varphi = eval_varphi_nys(build.map, landmarks.row(j));
    for (int i = 0; i < 8; ++i)
      CHECK(varphi(i) ==
            doctest::Approx(std::sqrt(build.map.lambda(i)) *
                            build.map.u_m(j, i))
                .epsilon(1e-8));
  }

  // k_hat reproduces the Gram matrix on the landmarks.
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(std::abs(nystrom_kernel_estimate(build.map, landmarks.row(i),
                                             landmarks.row(j)) -
                     k_alpha(p, landmarks.row(i), landmarks.row(j))) <= 1e-8);
}

TEST_CASE("projected kernel never exceeds the diagonal") {
  const KernelParams p{1.0, 0.3, 2};
  const Eigen::MatrixXd landmarks = gaussian_cloud(32, 2, 33);
  const NystromBuild build = build_nystrom(p, landmarks, 16);
  Rng rng = derive_stream(34, "nys-diag");
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);
    const Eigen::VectorXd varphi = eval_varphi_nys(build.map, x);
    CHECK(varphi.squaredNorm() <= k_alpha(p, x, x) + 1e-8);
  }
}

TEST_CASE("eval_psi_nys transcribes the split form") {
  const KernelParams p{1.0, 0.5, 1};
  Eigen::MatrixXd landmarks(8, 1);
  landmarks.col(0) = Eigen::VectorXd::LinSpaced(8, -3.0, 3.0);
  const NystromBuild build = build_nystrom(p, landmarks, 8);

  // f = 0: the scaled argument is also 0 and g(0)/alpha^d = 2.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd psi0 = eval_psi_nys(build.map, zero);
  const Eigen::VectorXd varphi0 = eval_varphi_nys(build.map, zero);
  CHECK((psi0 - 2.0 * varphi0).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd f = Eigen::VectorXd::Constant(1, 0.6);
  const Eigen::VectorXd psi = eval_psi_nys(build.map, f);
  const Eigen::VectorXd expected =
      (g_alpha(p, f) / p.alpha) *
      eval_varphi_nys(build.map, Eigen::VectorXd::Constant(1, 0.6 / 0.75));
  CHECK((psi - expected).cwiseAbs().maxCoeff() <= 1e-12);

  KernelParams zero_alpha{1.0, 0.0, 1};
  const NystromBuild plain = build_nystrom(zero_alpha, landmarks, 8);
  CHECK_THROWS_AS(eval_psi_nys(plain.map, f), std::domain_error);
}

TEST_CASE("eigenvalue scale enters varphi as an inverse square root") {
  const KernelParams p{1.0, 0.5, 1};
  Eigen::MatrixXd landmarks(4, 1);
  landmarks.col(0) = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  const NystromBuild build = build_nystrom(p, landmarks, 4);
  NystromFeatureMap scaled = build.map;
  scaled.lambda *= 2.0;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.2);
  const Eigen::VectorXd ratio =
      eval_varphi_nys(build.map, x).cwiseQuotient(eval_varphi_nys(scaled, x));
  CHECK(ratio.isApproxToConstant(std::sqrt(2.0), 1e-12));
}

TEST_CASE("coincident landmarks are reported as rank deficiency") {
  const KernelParams p{1.0, 0.5, 1};
  Eigen::MatrixXd landmarks(2, 1);
  landmarks << 0.4, 0.4;
  CHECK_THROWS_AS(build_nystrom(p, landmarks, 2), rank_deficiency_error);
  CHECK_THROWS_AS(build_nystrom(p, landmarks, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_nystrom(p, landmarks, 3), std::invalid_argument);
}

TEST_CASE("kernel_approx_error vanishes on the landmarks at full rank") {
  const KernelParams p{1.0, 0.5, 1};
  Eigen::MatrixXd landmarks(8, 1);
  landmarks.col(0) = Eigen::VectorXd::LinSpaced(8, -3.0, 3.0);
  const NystromBuild build = build_nystrom(p, landmarks, 8);
  CHECK(kernel_approx_error(wrap(build.map), p, landmarks) <= 1e-4);
}

TEST_CASE("kernel_approx_error is monotone in the rank") {
  const KernelParams p{1.0, 0.0, 1};
  const Eigen::MatrixXd landmarks = gaussian_cloud(32, 1, 35);
  double prev = std::numeric_limits<double>::infinity();
  for (const int m : {4, 8, 16, 32}) {
    const NystromBuild build = build_nystrom(p, landmarks, m);
    const double err = kernel_approx_error(wrap(build.map), p, landmarks);
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("dense landmark sets approximate the kernel on fresh points") {
  const KernelParams p{1.0, 0.0, 1};
  const Eigen::MatrixXd landmarks = gaussian_cloud(128, 1, 36);
  const Eigen::MatrixXd eval_points = gaussian_cloud(256, 1, 37);
  const NystromBuild build = build_nystrom(p, landmarks, 128);
  CHECK(kernel_approx_error(wrap(build.map), p, eval_points) <= 1e-3);
}

TEST_CASE("kernel_pair_mae is zero for the kernel itself") {
  const KernelParams p{1.0, 0.4, 2};
  const KernelEstimator exact = [&p](const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& y) {
    return k_alpha(p, x, y);
  };
  const Eigen::MatrixXd xs = gaussian_cloud(16, 2, 38);
  const Eigen::MatrixXd ys = gaussian_cloud(16, 2, 39);
  CHECK(kernel_pair_mae(exact, p, xs, ys) == 0.0);
}

TEST_CASE("eigendecay_fit recovers synthetic decay laws") {
  const int n = 20;
  GramEigen eig;
  eig.eigenvalues.resize(n);
  for (int j = 0; j < n; ++j)
    eig.eigenvalues(j) = n * std::exp(-2.0 * (j + 1));
  eig.u = Eigen::MatrixXd::Identity(n, n);
  const DecayFit exp_fit = eigendecay_fit(eig, n, {1.0, 2.0, 3.0});
  CHECK(exp_fit.h == doctest::Approx(1.0));
  CHECK(exp_fit.slope == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(exp_fit.r_squared >= 1.0 - 1e-10);

  for (int j = 0; j < n; ++j)
    eig.eigenvalues(j) = n * std::exp(-std::sqrt(j + 1.0));
  const DecayFit stretched = eigendecay_fit(eig, n, {1.0, 2.0, 3.0});
  CHECK(stretched.h == doctest::Approx(2.0));
  CHECK(stretched.slope == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian landmark gram fits a stretched-exponential law") {
  const KernelParams p{1.0, 0.0, 1};
  const Eigen::MatrixXd landmarks = gaussian_cloud(64, 1, 40);
  const NystromBuild build = build_nystrom(p, landmarks, 64);
  const DecayFit fit = eigendecay_fit(build.gram, 64, {1.0, 2.0, 3.0});
  CHECK(fit.r_squared >= 0.9);
  CHECK(fit.slope > 0.0);
}

TEST_CASE("fit_power_law recovers an exact power law") {
  const std::vector<double> xs = {1e3, 1e4, 1e5};
  std::vector<double> ys;
  for (const double x : xs) ys.push_back(3.0 * std::pow(x, -0.5));
  const DecayFit fit = fit_power_law(xs, ys);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(fit.r_squared >= 1.0 - 1e-12);
  CHECK_THROWS_AS(fit_power_law({1.0, -2.0}, {1.0, 1.0}),
                  std::invalid_argument);
}
