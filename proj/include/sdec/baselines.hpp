#pragma once

#include <vector>

#include <Eigen/Core>

#include "sdec/envs.hpp"

namespace sdec {

// Iterative LQR over env.step_raw with finite-difference derivatives and a
// log-barrier on the action box. The barrier is normalized to be zero at the
// box midpoint and nonnegative everywhere, and its weight is halved after
// every iteration, so the recorded cost sequence never increases.
struct IlqrConfig {
  int max_iterations = 50;
  double cost_tol = 1e-9;       // relative improvement treated as converged
  double barrier_weight = 1.0;  // initial log-barrier weight; 0 disables it
  double barrier_floor = 1e-5;  // the weight is never halved below this
  double reg_init = 1e-9;       // Levenberg regularization on Quu
  double reg_max = 1e10;        // giving-up threshold
  double jac_step = 1e-5;       // central-difference step, first derivatives
  double hess_step = 1e-3;      // central-difference step, second derivatives
};

struct IlqrSolution {
  Eigen::MatrixXd states;    // (H + 1) x state_dim nominal trajectory
  Eigen::MatrixXd controls;  // H x action_dim nominal controls
  // Time-varying affine policy around the nominal trajectory:
  // u_t = controls[t] + feedforward[t] + feedback[t] (x - states[t]).
  std::vector<Eigen::MatrixXd> feedback;
  std::vector<Eigen::VectorXd> feedforward;
  // Entry 0 is the cost of the initial control sequence; entry i > 0 the
  // cost after iteration i (under that iteration's final barrier weight).
  std::vector<double> cost_per_iteration;
  bool converged = false;
};

IlqrSolution ilqr_solve(const EnvModel& env, const Eigen::VectorXd& x0,
                        const Eigen::MatrixXd& u_init, const IlqrConfig& cfg);

// Plays the solution back as a time-varying affine policy; state deviations
// in angle coordinates are wrapped before the feedback term is applied.
EnvPolicy make_ilqr_policy(const EnvModel& env, const IlqrSolution& solution);

// Energy-shaping swing-up for the torque pendulum: with E = thdot^2 / 6
// + 5 cos(theta) the rod's scaled energy and E_top its value balanced
// upright, the torque u = clip(k_energy (E_top - E) sign(thdot)) gives
// dE/dt = u thdot = k_energy (E_top - E) |thdot| >= 0 below the target, so
// the energy rises monotonically to E_top. Near upright a fixed-gain LQR
// (from the discrete linearization) takes over. The regulated E carries a
// shadow_coeff * thdot * sin(theta) correction: it is the energy the
// semi-implicit integrator conserves along an orbit, and regulating the raw
// formula instead leaves the swing apex short of the LQR gate.
struct EnergySwingupParams {
  double k_energy = 1.0;
  double theta_switch = 0.35;  // |theta| below which the LQR branch engages
  double e_top = 5.0;
  double u_max = 2.0;
  double shadow_coeff = 0.125;  // (dt / 2) * 5 at the pendulum's dt = 0.05
  Eigen::RowVector2d lqr_gain;  // u = -gain * (theta, thdot)
};

EnergySwingupParams make_energy_swingup(const EnvModel& pendulum);

Eigen::VectorXd energy_swingup_action(const EnergySwingupParams& params,
                                      const Eigen::VectorXd& s);

EnvPolicy make_energy_swingup_policy(const EnvModel& pendulum);

// Deterministic zero-action and uniform-random-action reference policies.
EnvPolicy make_zero_policy(const EnvModel& env);
EnvPolicy make_uniform_policy(const EnvModel& env);

// Evaluates a baseline policy with the shared episode protocol.
EvalStats run_baseline(const EnvModel& env, const EnvPolicy& policy,
                       int episodes, std::uint64_t seed);

}  // namespace sdec
