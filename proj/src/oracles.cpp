#include "sdec/oracles.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "sdec/rng.hpp"

namespace sdec::oracles {

void TabularMdp::validate() const {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("TabularMdp: empty state or action set");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("TabularMdp: gamma must be in [0, 1)");
  if (reward.rows() != num_states || reward.cols() != num_actions)
    throw std::invalid_argument("TabularMdp: reward shape mismatch");
  if (static_cast<int>(transition.size()) != num_actions)
    throw std::invalid_argument("TabularMdp: one transition matrix per action");
  for (const auto& t : transition) {
    if (t.rows() != num_states || t.cols() != num_states)
      throw std::invalid_argument("TabularMdp: transition shape mismatch");
    if (t.minCoeff() < 0.0)
      throw std::invalid_argument("TabularMdp: negative transition probability");
    for (int s = 0; s < num_states; ++s)
      if (std::abs(t.row(s).sum() - 1.0) > 1e-12)
        throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
  }
}

Eigen::MatrixXd value_iteration(const TabularMdp& mdp, double tol) {
  mdp.validate();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  Eigen::MatrixXd next(mdp.num_states, mdp.num_actions);
  // Residual bound: |q_{k+1}-q_k|_inf <= tol*(1-gamma)/gamma gives
  // |q_k - q*|_inf <= tol.
  const double stop = tol * (1.0 - mdp.gamma) / mdp.gamma;
  for (int iter = 0; iter < 1000000; ++iter) {
    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    for (int a = 0; a < mdp.num_actions; ++a)
      next.col(a) = mdp.reward.col(a) + mdp.gamma * (mdp.transition[a] * v);
    const double diff = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (diff <= stop) return q;
  }
  throw std::runtime_error("value_iteration: did not converge");
}

namespace {

void check_policy(const TabularMdp& mdp, const Eigen::MatrixXd& policy) {
  if (policy.rows() != mdp.num_states || policy.cols() != mdp.num_actions)
    throw std::invalid_argument("policy shape mismatch");
  if (policy.minCoeff() < 0.0)
    throw std::invalid_argument("policy has negative probabilities");
  for (int s = 0; s < mdp.num_states; ++s)
    if (std::abs(policy.row(s).sum() - 1.0) > 1e-10)
      throw std::invalid_argument("policy row does not sum to 1");
}

}  // namespace

Eigen::MatrixXd cell_chain(const TabularMdp& mdp, const Eigen::MatrixXd& policy) {
  mdp.validate();
  check_policy(mdp, policy);
  const int n = mdp.num_cells();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      for (int sn = 0; sn < mdp.num_states; ++sn)
        for (int an = 0; an < mdp.num_actions; ++an)
          m(s * mdp.num_actions + a, sn * mdp.num_actions + an) =
              mdp.transition[a](s, sn) * policy(sn, an);
  return m;
}

Eigen::MatrixXd tabular_policy_q(const TabularMdp& mdp,
                                 const Eigen::MatrixXd& policy) {
  mdp.validate();
  check_policy(mdp, policy);
  const int n = mdp.num_cells();
  const Eigen::MatrixXd m = cell_chain(mdp, policy);
  Eigen::VectorXd r(n);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      r(s * mdp.num_actions + a) = mdp.reward(s, a);
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * m;
  const Eigen::VectorXd q = lhs.partialPivLu().solve(r);
  Eigen::MatrixXd out(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      out(s, a) = q(s * mdp.num_actions + a);
  return out;
}

Eigen::VectorXd policy_value(const Eigen::MatrixXd& q,
                             const Eigen::MatrixXd& policy) {
  if (q.rows() != policy.rows() || q.cols() != policy.cols())
    throw std::invalid_argument("policy_value: shape mismatch");
  return (q.array() * policy.array()).rowwise().sum();
}

Eigen::VectorXd stationary_distribution(const TabularMdp& mdp,
                                        const Eigen::MatrixXd& policy) {
  mdp.validate();
  check_policy(mdp, policy);
  const int n = mdp.num_cells();
  const Eigen::MatrixXd m = cell_chain(mdp, policy);
  Eigen::VectorXd nu = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int iter = 0; iter < 100000; ++iter) {
    // Damping removes periodicity without changing the fixed point.
    Eigen::VectorXd next = 0.5 * nu + 0.5 * (m.transpose() * nu);
    next /= next.sum();
    const double diff = (next - nu).cwiseAbs().maxCoeff();
    nu = next;
    if (diff < 1e-15) return nu;
  }
  throw std::runtime_error("stationary_distribution: did not converge");
}

double gaussian_density(const Eigen::Ref<const Eigen::VectorXd>& f_val,
                        double sigma,
                        const Eigen::Ref<const Eigen::VectorXd>& s_next) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("gaussian_density: sigma must be > 0");
  if (f_val.size() != s_next.size())
    throw std::invalid_argument("gaussian_density: dimension mismatch");
  const double d = static_cast<double>(f_val.size());
  return std::pow(2.0 * M_PI * sigma * sigma, -0.5 * d) *
         std::exp(-(s_next - f_val).squaredNorm() / (2.0 * sigma * sigma));
}

RiccatiSolution riccati_finite_horizon(const std::vector<Eigen::MatrixXd>& a_t,
                                       const std::vector<Eigen::MatrixXd>& b_t,
                                       const std::vector<Eigen::MatrixXd>& q_t,
                                       const std::vector<Eigen::MatrixXd>& r_t,
                                       int horizon) {
  if (horizon < 1) throw std::invalid_argument("riccati: horizon must be >= 1");
  const auto at = [](const std::vector<Eigen::MatrixXd>& v, int t)
      -> const Eigen::MatrixXd& {
    return v.size() == 1 ? v[0] : v.at(t);
  };
  if (static_cast<int>(a_t.size()) != horizon && a_t.size() != 1)
    throw std::invalid_argument("riccati: a_t must have H entries");
  if (static_cast<int>(b_t.size()) != horizon && b_t.size() != 1)
    throw std::invalid_argument("riccati: b_t must have H entries");

  RiccatiSolution sol;
  sol.gain.resize(horizon);
  sol.value.resize(horizon + 1);
  sol.value[horizon] = q_t.size() == 1 ? q_t[0] : q_t.back();
  for (int t = horizon - 1; t >= 0; --t) {
    const Eigen::MatrixXd& a = at(a_t, t);
    const Eigen::MatrixXd& b = at(b_t, t);
    const Eigen::MatrixXd& q = at(q_t, t);
    const Eigen::MatrixXd& r = at(r_t, t);
    const Eigen::MatrixXd& p_next = sol.value[t + 1];
    const Eigen::MatrixXd guu = r + b.transpose() * p_next * b;
    const Eigen::MatrixXd gux = b.transpose() * p_next * a;
    sol.gain[t] = guu.ldlt().solve(gux);
    const Eigen::MatrixXd acl = a - b * sol.gain[t];
    sol.value[t] = q + sol.gain[t].transpose() * r * sol.gain[t] +
                   acl.transpose() * p_next * acl;
  }
  return sol;
}

RiccatiSolution riccati_finite_horizon(const Eigen::MatrixXd& a,
                                       const Eigen::MatrixXd& b,
                                       const Eigen::MatrixXd& q,
                                       const Eigen::MatrixXd& r, int horizon) {
  return riccati_finite_horizon(std::vector<Eigen::MatrixXd>{a},
                                std::vector<Eigen::MatrixXd>{b},
                                std::vector<Eigen::MatrixXd>{q},
                                std::vector<Eigen::MatrixXd>{r}, horizon);
}

TabularMdp random_mdp(int num_states, int num_actions, double gamma,
                      std::uint64_t seed) {
  Rng rng = derive_stream(seed, "oracle-mdp");
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.gamma = gamma;
  mdp.reward.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a)
      mdp.reward(s, a) = rng.uniform(-1.0, 1.0);
  mdp.transition.resize(num_actions);
  for (int a = 0; a < num_actions; ++a) {
    mdp.transition[a].resize(num_states, num_states);
    for (int s = 0; s < num_states; ++s) {
      // Positive rows keep the cell chain irreducible.
      for (int sn = 0; sn < num_states; ++sn)
        mdp.transition[a](s, sn) = 0.05 + rng.uniform();
      mdp.transition[a].row(s) /= mdp.transition[a].row(s).sum();
    }
  }
  return mdp;
}

Eigen::MatrixXd random_policy(int num_states, int num_actions,
                              std::uint64_t seed) {
  Rng rng = derive_stream(seed, "oracle-policy");
  Eigen::MatrixXd pi(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) pi(s, a) = 0.1 + rng.uniform();
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

}  // namespace sdec::oracles
