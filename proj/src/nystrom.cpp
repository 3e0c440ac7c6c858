#include "sdec/nystrom.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <string>

namespace sdec {
namespace {

constexpr double kRankTolerance = 1e-12;  // relative to the largest eigenvalue

Eigen::VectorXd landmark_kernel_column(const NystromFeatureMap& map,
                                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = map.landmarks.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index l = 0; l < n; ++l)
    k(l) = k_alpha(map.params, map.landmarks.row(l).transpose(), x);
  return k;
}

}  // namespace

GramEigen sym_eigen_descending(const Eigen::MatrixXd& sym) {
  if (sym.rows() != sym.cols() || sym.rows() < 1)
    throw std::invalid_argument("sym_eigen_descending: square matrix required");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sym_eigen_descending: eigensolver failed");
  const Eigen::Index n = sym.rows();
  const double min_allowed = -1e-8 * static_cast<double>(n);
  if (solver.eigenvalues().minCoeff() < min_allowed)
    throw std::invalid_argument(
        "sym_eigen_descending: eigenvalue below the PSD round-off floor");
  GramEigen out;
  out.eigenvalues.resize(n);
  out.u.resize(n, n);
  // Eigen returns ascending order; reverse and clamp round-off negatives.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(n - 1 - i));
    out.u.col(i) = solver.eigenvectors().col(n - 1 - i);
    Eigen::Index at = 0;
    out.u.col(i).cwiseAbs().maxCoeff(&at);
    if (out.u(at, i) < 0.0) out.u.col(i) = -out.u.col(i);
  }
  return out;
}

NystromBuild build_nystrom(const KernelParams& params,
                           const Eigen::MatrixXd& landmarks, int m) {
  params.validate();
  const Eigen::Index n = landmarks.rows();
  if (n < 1) throw std::invalid_argument("build_nystrom: no landmarks");
  if (landmarks.cols() != params.d)
    throw std::invalid_argument("build_nystrom: landmark dimension mismatch");
  if (m < 1 || m > n)
    throw std::invalid_argument("build_nystrom: need 1 <= m <= n_nys");

  Eigen::MatrixXd gram(n, n);
  bool coincident = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = k_alpha(params, landmarks.row(i).transpose(),
                               landmarks.row(j).transpose());
      gram(i, j) = v;
      gram(j, i) = v;
      if ((landmarks.row(i) - landmarks.row(j)).squaredNorm() < 1e-24)
        coincident = true;
    }
  }

  NystromBuild out;
  out.gram = sym_eigen_descending(gram);
  const double lead = out.gram.eigenvalues(0);
  int effective = 0;
  while (effective < n &&
         out.gram.eigenvalues(effective) > kRankTolerance * lead)
    ++effective;
  if (m > effective && coincident)
    throw rank_deficiency_error(
        "build_nystrom: coincident landmarks leave effective rank " +
        std::to_string(effective) + ", less than requested m = " +
        std::to_string(m));
  const int kept = std::min(m, effective);
  if (kept < m)
    std::clog << "build_nystrom: rank truncated from " << m << " to " << kept
              << " (trailing eigenvalues below tolerance)\n";

  out.map.params = params;
  out.map.landmarks = landmarks;
  out.map.requested_m = m;
  out.map.lambda = out.gram.eigenvalues.head(kept);
  out.map.u_m = out.gram.u.leftCols(kept);
  return out;
}

Eigen::VectorXd eval_varphi_nys(const NystromFeatureMap& map,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != map.params.d)
    throw std::invalid_argument("eval_varphi_nys: dimension mismatch");
  const Eigen::VectorXd k = landmark_kernel_column(map, x);
  return map.lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
         (map.u_m.transpose() * k);
}

Eigen::VectorXd eval_psi_nys(const NystromFeatureMap& map,
                             const Eigen::Ref<const Eigen::VectorXd>& f_val) {
  const KernelParams& p = map.params;
  if (p.alpha <= 0.0)
    throw std::domain_error(
        "eval_psi_nys: alpha = 0 degenerates the alpha^d prefactor; evaluate "
        "eval_varphi_nys on f directly for the plain projection");
  if (f_val.size() != p.d)
    throw std::invalid_argument("eval_psi_nys: dimension mismatch");
  const double prefactor = g_alpha(p, f_val) / std::pow(p.alpha, p.d);
  const Eigen::VectorXd scaled = f_val / (1.0 - p.alpha * p.alpha);
  return prefactor * eval_varphi_nys(map, scaled);
}

double nystrom_kernel_estimate(const NystromFeatureMap& map,
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  return eval_varphi_nys(map, x).dot(eval_varphi_nys(map, y));
}

}  // namespace sdec
