#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sdec/rng.hpp"

namespace sdec {

// Where process noise enters a step: added to every coordinate, or scaled by
// sqrt(dt) and added to the velocity coordinates only (the discretization of
// noise on the accelerations).
enum class NoiseTarget { kFullState, kAccelCoords };

// A discrete-time control benchmark. The deterministic part of the dynamics
// is step_raw (semi-implicit Euler, velocities clipped, angles left
// unwrapped); f_eval wraps angle coordinates to (-pi, pi] and clips the state
// box on top of it. Rewards are negated quadratic costs, so always <= 0.
struct EnvModel {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd action_lo, action_hi;
  double dt = 0.0;
  int horizon = 0;
  double sigma_noise = 0.0;
  NoiseTarget noise_target = NoiseTarget::kAccelCoords;
  Eigen::VectorXd state_lo, state_hi;   // clip box; angle coords use +-pi
  std::vector<int> angle_indices;       // wrapped to (-pi, pi]
  std::vector<int> velocity_indices;    // receive kAccelCoords noise
  Eigen::VectorXd init_nominal;         // episode start center
  double init_spread = 0.1;             // uniform perturbation half-width
  double c_f = 0.0;                     // sup_{box} |f(s, a)|
  double c_r = 0.0;                     // sup_{box} |reward(s, a)|

  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      step_raw;  // expects a clipped action
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      reward_raw;  // wraps its own angle coordinates, expects a clipped action
  std::function<double(const Eigen::VectorXd&)> energy;  // set where meaningful
};

// Inverted pendulum (rod model), state (theta, theta_dot), theta = 0 upright.
// theta_ddot = (3g / 2l) sin(theta) + 3u / (m l^2), g = 10, m = l = 1,
// |u| <= 2, dt = 0.05, horizon 200, reward -(theta^2 + 0.1 theta_dot^2
// + 0.001 u^2), starts near hanging. energy() is the conserved quantity of
// the rod, theta_dot^2 / 6 + 5 cos(theta).
EnvModel make_pendulum();

// Cart-pole swing-up, state (x, x_dot, theta, theta_dot), theta = 0 upright,
// m_c = 1, m_p = 0.1, l = 0.5, g = 9.8, |u| <= 10, dt = 0.02, horizon 500,
// reward -(theta^2 + 0.1 theta_dot^2 + 0.05 x^2 + 0.001 u^2), starts near
// hanging.
EnvModel make_cartpole();

// Pendubot balance, state (q1, q2, q1_dot, q2_dot), both angles measured
// from upright (q2 relative to link 1), torque on joint 1 only, |u| <= 5,
// m1 = m2 = 1, l1 = l2 = 1, lc = 0.5, point-mass links, g = 9.8, dt = 0.01,
// horizon 400, reward -(q1^2 + q2^2 + 0.1 |q_dot|^2 + 0.001 u^2), starts
// near upright.
EnvModel make_pendubot();

// Planar drone hover, state (x, y, x_dot, y_dot, phi, phi_dot), two thrusts
// T1, T2 in [0, 10], m = 1, L = 0.3, I = 0.05, g = 10, dt = 0.02, horizon
// 300, reward -(x^2 + y^2 + 0.1 (x_dot^2 + y_dot^2 + phi_dot^2) + phi^2
// + 0.001 |T - T_hover|^2), starts near the origin.
EnvModel make_drone2d();

// Factory by name: pendulum, cartpole, pendubot, drone2d.
EnvModel make_env(const std::string& name);

// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

// Clips an action to the bounds; second element reports whether any
// coordinate moved.
std::pair<Eigen::VectorXd, bool> clip_action(const EnvModel& env,
                                             const Eigen::VectorXd& a);

// Deterministic part of a step: clip action, integrate, wrap angles, clip the
// state box. Throws on non-finite or mis-sized state.
Eigen::VectorXd f_eval(const EnvModel& env, const Eigen::VectorXd& s,
                       const Eigen::VectorXd& a);

// Reward of (s, a) with the action clipped; always <= 0.
double env_reward(const EnvModel& env, const Eigen::VectorXd& s,
                  const Eigen::VectorXd& a);

// f_eval plus process noise per noise_target, re-wrapped and re-clipped.
Eigen::VectorXd env_step(const EnvModel& env, const Eigen::VectorXd& s,
                         const Eigen::VectorXd& a, Rng& rng);

// init_nominal plus a U(-init_spread, init_spread) perturbation per
// coordinate, wrapped and clipped.
Eigen::VectorXd sample_initial_state(const EnvModel& env, Rng& rng);

// A (possibly time-dependent, possibly stochastic) mapping state -> action.
using EnvPolicy =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, Rng&)>;

struct Trajectory {
  Eigen::MatrixXd states;   // (H + 1) x state_dim
  Eigen::MatrixXd actions;  // H x action_dim
  Eigen::VectorXd rewards;  // H
  double undiscounted = 0.0;
  double discounted = 0.0;
};

Trajectory rollout(const EnvModel& env, const EnvPolicy& policy, int horizon,
                   Rng& rng, double gamma);

// Transitions harvested from restarted on-policy episodes: the first burn_in
// steps of the stream are discarded, then every stride-th transition is
// recorded. a_next is drawn fresh from the policy at s_next.
struct SampleBatch {
  Eigen::MatrixXd s, a, s_next, a_next;
  Eigen::VectorXd r;
  std::string policy_id;
  int burn_in = 0;
  int stride = 1;

  Eigen::Index size() const { return r.size(); }
};

SampleBatch collect_stationary_batch(const EnvModel& env,
                                     const EnvPolicy& policy, int n,
                                     int burn_in, int stride, Rng& rng,
                                     const std::string& policy_id = "");

// Mean and population standard deviation of undiscounted returns over
// full-horizon episodes (std = 0 for a single episode).
struct EvalStats {
  double mean = 0.0;
  double stddev = 0.0;
};

EvalStats evaluate_env_policy(const EnvModel& env, const EnvPolicy& policy,
                              int episodes, Rng& rng);

}  // namespace sdec
