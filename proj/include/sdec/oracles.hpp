#pragma once

#include <Eigen/Core>
#include <vector>

// Reference solvers used to pin expected values in tests. Everything here is
// solved by a method independent of the estimators under test: dynamic
// programming, direct linear solves, closed-form densities.
namespace sdec::oracles {

// Finite MDP. State-action cells are indexed cell = s * num_actions + a
// throughout the toolkit.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.9;
  Eigen::MatrixXd reward;                    // num_states x num_actions
  std::vector<Eigen::MatrixXd> transition;   // per action: num_states x num_states,
                                             // row s is the distribution of s'

  void validate() const;  // shapes, row sums within 1e-12, gamma in [0, 1)
  int num_cells() const { return num_states * num_actions; }
};

// Optimal Q function by value iteration, run until the sup-norm Bellman
// residual is <= tol. Returns a num_states x num_actions matrix.
Eigen::MatrixXd value_iteration(const TabularMdp& mdp, double tol = 1e-12);

// Q^pi by direct solve of (I - gamma M) q = r over cells, where
// M[(s,a),(s',a')] = P(s'|s,a) pi(a'|s'). policy is num_states x num_actions,
// rows on the simplex. Returns a num_states x num_actions matrix.
Eigen::MatrixXd tabular_policy_q(const TabularMdp& mdp,
                                 const Eigen::MatrixXd& policy);

// V^pi(s) = sum_a pi(a|s) Q^pi(s,a) for a given Q table.
Eigen::VectorXd policy_value(const Eigen::MatrixXd& q,
                             const Eigen::MatrixXd& policy);

// Stationary distribution over cells of the chain (s,a) -> (s',a') induced by
// the policy, found by damped power iteration. Requires the chain to have a
// unique stationary distribution (holds for the strictly positive transition
// matrices used in tests).
Eigen::VectorXd stationary_distribution(const TabularMdp& mdp,
                                        const Eigen::MatrixXd& policy);

// Markov chain over cells: M[(s,a),(s',a')] = P(s'|s,a) pi(a'|s').
Eigen::MatrixXd cell_chain(const TabularMdp& mdp,
                           const Eigen::MatrixXd& policy);

// Isotropic Gaussian density N(s' | f, sigma^2 I).
double gaussian_density(const Eigen::Ref<const Eigen::VectorXd>& f_val,
                        double sigma,
                        const Eigen::Ref<const Eigen::VectorXd>& s_next);

// Finite-horizon discrete-time LQR via the backward Riccati recursion for
// cost sum_{t<H} (x'Q x + u'R u) + x_H' Q x_H. The optimal control is
// u_t = -gain[t] x_t. value[t] is the cost-to-go matrix P_t, t = 0..H.
struct RiccatiSolution {
  std::vector<Eigen::MatrixXd> gain;   // H entries
  std::vector<Eigen::MatrixXd> value;  // H + 1 entries
};

// Time-varying coefficients; a_t, b_t must have H entries, q_t, r_t either H
// entries or one entry broadcast across time. The terminal weight is the last
// q entry.
RiccatiSolution riccati_finite_horizon(const std::vector<Eigen::MatrixXd>& a_t,
                                       const std::vector<Eigen::MatrixXd>& b_t,
                                       const std::vector<Eigen::MatrixXd>& q_t,
                                       const std::vector<Eigen::MatrixXd>& r_t,
                                       int horizon);

// Constant-coefficient convenience overload.
RiccatiSolution riccati_finite_horizon(const Eigen::MatrixXd& a,
                                       const Eigen::MatrixXd& b,
                                       const Eigen::MatrixXd& q,
                                       const Eigen::MatrixXd& r, int horizon);

// Deterministically generated MDP with strictly positive transitions and
// rewards in [-1, 1]; used across tests that need "some" fixed MDP.
TabularMdp random_mdp(int num_states, int num_actions, double gamma,
                      std::uint64_t seed);

// Deterministically generated row-stochastic policy with full support.
Eigen::MatrixXd random_policy(int num_states, int num_actions,
                              std::uint64_t seed);

}  // namespace sdec::oracles
