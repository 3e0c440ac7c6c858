#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "sdec/kernel.hpp"

namespace sdec {

// Eigendecomposition of a kernel Gram matrix: eigenvalues sorted descending
// with round-off negatives clamped to zero, orthonormal eigenvectors in the
// matching column order. Eigenvector signs are canonicalized (largest-
// magnitude entry positive) so decompositions are reproducible.
struct GramEigen {
  Eigen::VectorXd eigenvalues;  // length n, descending, >= 0
  Eigen::MatrixXd u;            // n x n, column i pairs with eigenvalues(i)
};

// Dense symmetric eigendecomposition with the ordering and clamping above.
// Throws if an eigenvalue is below -1e-8 * n (the matrix was not a Gram
// matrix up to round-off).
GramEigen sym_eigen_descending(const Eigen::MatrixXd& sym);

struct rank_deficiency_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-m Nystrom approximation of k_alpha built on landmark points.
struct NystromFeatureMap {
  KernelParams params;
  Eigen::MatrixXd landmarks;  // n_nys x d, one point per row
  Eigen::MatrixXd u_m;        // n_nys x m, orthonormal columns
  Eigen::VectorXd lambda;     // m Gram eigenvalues, descending, > 0
  int requested_m = 0;        // before any rank truncation

  int rank() const { return static_cast<int>(lambda.size()); }
  bool truncated() const { return rank() < requested_m; }
};

struct NystromBuild {
  NystromFeatureMap map;
  GramEigen gram;  // full decomposition of the landmark Gram matrix
};

// Builds the rank-m map: forms the landmark Gram under k_alpha, decomposes
// it, and keeps the top m eigenpairs. Trailing eigenvalues below
// 1e-12 * lambda_max are dropped, shrinking the rank (reported through
// truncated()). When the requested rank exceeds the effective rank because of
// coincident landmarks, throws rank_deficiency_error naming the effective
// rank instead. Requires 1 <= m <= n_nys.
NystromBuild build_nystrom(const KernelParams& params,
                           const Eigen::MatrixXd& landmarks, int m);

// Nystrom eigenfunction features:
// varphi_i(x) = lambda_i^{-1/2} sum_l u_m(l, i) k_alpha(x_l, x).
// At landmark x_j with full rank, varphi_i(x_j) = sqrt(lambda_i) u_m(j, i).
Eigen::VectorXd eval_varphi_nys(const NystromFeatureMap& map,
                                const Eigen::Ref<const Eigen::VectorXd>& x);

// Split-form embedding of a deterministic next state:
// psi(f) = (g_alpha(f) / alpha^d) varphi(f / (1 - alpha^2)).
// Requires alpha in (0, 1).
Eigen::VectorXd eval_psi_nys(const NystromFeatureMap& map,
                             const Eigen::Ref<const Eigen::VectorXd>& f_val);

// k_hat(x, y) = varphi(x)' varphi(y), the rank-m projected kernel. Satisfies
// k_hat(x, x) <= k_alpha(x, x) up to round-off.
double nystrom_kernel_estimate(const NystromFeatureMap& map,
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace sdec
