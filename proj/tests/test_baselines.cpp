#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "sdec/baselines.hpp"
#include "sdec/envs.hpp"
#include "sdec/oracles.hpp"
#include "sdec/rng.hpp"

namespace {

// Linear system s' = A s + B u with quadratic cost, wide boxes, so iLQR with
// the barrier disabled must reproduce the finite-horizon Riccati solution.
sdec::EnvModel make_lq_env() {
  sdec::EnvModel env;
  env.name = "lq";
  env.state_dim = 2;
  env.action_dim = 1;
  env.action_lo = Eigen::VectorXd::Constant(1, -50.0);
  env.action_hi = Eigen::VectorXd::Constant(1, 50.0);
  env.dt = 0.1;
  env.horizon = 20;
  env.state_lo = Eigen::VectorXd::Constant(2, -1e9);
  env.state_hi = Eigen::VectorXd::Constant(2, 1e9);
  env.init_nominal = Eigen::VectorXd::Zero(2);
  env.init_spread = 0.0;
  env.c_f = 10.0;
  env.c_r = 10.0;
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 1.0, 0.1, -0.2, 0.95;
  b << 0.0, 0.1;
  env.step_raw = [a, b](const Eigen::VectorXd& s, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(a * s + b * u);
  };
  env.reward_raw = [](const Eigen::VectorXd& s, const Eigen::VectorXd& u) {
    return -(s.squaredNorm() + 0.5 * u.squaredNorm());
  };
  return env;
}

sdec::oracles::RiccatiSolution lq_riccati(int horizon) {
  Eigen::MatrixXd a(2, 2), b(2, 1), r(1, 1);
  a << 1.0, 0.1, -0.2, 0.95;
  b << 0.0, 0.1;
  r << 0.5;
  return sdec::oracles::riccati_finite_horizon(
      a, b, Eigen::MatrixXd::Identity(2, 2), r, horizon);
}

double max_gain_mismatch(const sdec::IlqrSolution& sol,
                         const sdec::oracles::RiccatiSolution& ric) {
  double worst = 0.0;
  for (std::size_t t = 0; t < sol.feedback.size(); ++t) {
    worst = std::max(worst,
                     (sol.feedback[t] + ric.gain[t]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("ilqr recovers the Riccati feedback gains on a linear system") {
  const sdec::EnvModel env = make_lq_env();
  const sdec::oracles::RiccatiSolution ric = lq_riccati(env.horizon);

  Eigen::VectorXd x0(2);
  x0 << 1.0, -0.5;
  sdec::IlqrConfig cfg;
  cfg.barrier_weight = 0.0;
  const sdec::IlqrSolution sol =
      sdec::ilqr_solve(env, x0, Eigen::MatrixXd::Zero(env.horizon, 1), cfg);

  CHECK(sol.converged);
  REQUIRE(sol.feedback.size() == static_cast<std::size_t>(env.horizon));
  REQUIRE(sol.feedforward.size() == static_cast<std::size_t>(env.horizon));
  CHECK(sol.states.rows() == env.horizon + 1);
  CHECK(sol.controls.rows() == env.horizon);
  CHECK((sol.states.row(0).transpose() - x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_gain_mismatch(sol, ric) <= 1e-6);

  // Cost strictly positive (state starts away from the origin) and
  // non-increasing across iterations.
  CHECK(sol.cost_per_iteration.front() > 0.0);
  for (std::size_t i = 1; i < sol.cost_per_iteration.size(); ++i) {
    CHECK(sol.cost_per_iteration[i] <=
          sol.cost_per_iteration[i - 1] + 1e-12);
  }
}

TEST_CASE("ilqr quadratic convergence: one iteration already matches") {
  const sdec::EnvModel env = make_lq_env();
  const sdec::oracles::RiccatiSolution ric = lq_riccati(env.horizon);

  Eigen::VectorXd x0(2);
  x0 << 1.0, -0.5;
  sdec::IlqrConfig cfg;
  cfg.barrier_weight = 0.0;
  cfg.max_iterations = 1;
  const sdec::IlqrSolution sol =
      sdec::ilqr_solve(env, x0, Eigen::MatrixXd::Zero(env.horizon, 1), cfg);
  CHECK(max_gain_mismatch(sol, ric) <= 1e-6);
}

TEST_CASE("ilqr leaves an already-optimal initialization unchanged") {
  const sdec::EnvModel env = make_lq_env();
  sdec::IlqrConfig cfg;
  cfg.barrier_weight = 0.0;
  const sdec::IlqrSolution sol = sdec::ilqr_solve(
      env, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(env.horizon, 1),
      cfg);
  CHECK(sol.converged);
  CHECK(sol.controls.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.cost_per_iteration.back() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ilqr swings the pendulum up with a monotone cost sequence") {
  const sdec::EnvModel env = sdec::make_env("pendulum");
  Eigen::VectorXd x0(2);
  x0 << 2.9, 0.0;
  const sdec::IlqrConfig cfg;
  const sdec::IlqrSolution sol =
      sdec::ilqr_solve(env, x0, Eigen::MatrixXd::Zero(env.horizon, 1), cfg);

  REQUIRE(sol.cost_per_iteration.size() >= 2);
  for (std::size_t i = 1; i < sol.cost_per_iteration.size(); ++i) {
    CHECK(sol.cost_per_iteration[i] <=
          sol.cost_per_iteration[i - 1] + 1e-12);
  }
  CHECK(sol.converged);
  CHECK(sol.cost_per_iteration.back() <
        0.75 * sol.cost_per_iteration.front());

  // Closed-loop playback must beat hanging with zero torque. Pin the start
  // to x0 so both rollouts are deterministic.
  sdec::EnvModel pinned = env;
  pinned.init_nominal = x0;
  pinned.init_spread = 0.0;
  sdec::Rng rng_a = sdec::derive_stream(1, "bl-ilqr");
  sdec::Rng rng_b = sdec::derive_stream(1, "bl-ilqr");
  const sdec::Trajectory closed = sdec::rollout(
      pinned, sdec::make_ilqr_policy(env, sol), env.horizon, rng_a, 1.0);
  const sdec::Trajectory idle = sdec::rollout(
      pinned, sdec::make_zero_policy(env), env.horizon, rng_b, 1.0);
  CHECK(closed.undiscounted > idle.undiscounted + 100.0);

  // The final nominal state has left the hanging basin.
  const Eigen::VectorXd last = sol.states.row(env.horizon).transpose();
  CHECK(std::abs(sdec::wrap_angle(last(0))) < 1.0);
}

TEST_CASE("energy swing-up parameters match the pendulum model") {
  const sdec::EnvModel env = sdec::make_env("pendulum");
  const sdec::EnergySwingupParams params = sdec::make_energy_swingup(env);
  CHECK(params.e_top == doctest::Approx(5.0));
  CHECK(params.u_max == doctest::Approx(2.0));
  CHECK(params.k_energy > 0.0);
  CHECK(params.shadow_coeff == doctest::Approx(0.125));
  CHECK(params.lqr_gain.allFinite());

  // Balanced upright at rest: the LQR branch is active and asks for nothing.
  Eigen::VectorXd upright(2);
  upright << 0.0, 0.0;
  CHECK(sdec::energy_swingup_action(params, upright)(0) == 0.0);

  // Hanging at rest: the pump branch kicks at full torque to break the
  // symmetry (sign(0) is treated as positive).
  Eigen::VectorXd hanging(2);
  hanging << M_PI, 0.0;
  CHECK(sdec::energy_swingup_action(params, hanging)(0) ==
        doctest::Approx(2.0));

  // Mid-swing below the target energy, the torque follows sign(thdot).
  Eigen::VectorXd swing(2);
  swing << 2.5, 1.0;
  CHECK(sdec::energy_swingup_action(params, swing)(0) > 0.0);
  swing(1) = -1.0;
  CHECK(sdec::energy_swingup_action(params, swing)(0) < 0.0);

  // Near upright the action is the clipped linear feedback.
  Eigen::VectorXd near(2);
  near << 0.1, -0.05;
  const double expected =
      std::clamp(-params.lqr_gain.dot(near.transpose()), -2.0, 2.0);
  CHECK(sdec::energy_swingup_action(params, near)(0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("energy swing-up reaches the upright basin from hanging") {
  sdec::EnvModel env = sdec::make_env("pendulum");
  env.sigma_noise = 0.0;
  const sdec::EnvPolicy policy = sdec::make_energy_swingup_policy(env);
  sdec::Rng rng = sdec::derive_stream(3, "bl-energy");

  const sdec::EnergySwingupParams params = sdec::make_energy_swingup(env);
  const auto regulated = [&params](const Eigen::VectorXd& x) {
    const double th = sdec::wrap_angle(x(0));
    return x(1) * x(1) / 6.0 + 5.0 * std::cos(th) +
           params.shadow_coeff * x(1) * std::sin(th);
  };

  Eigen::VectorXd s(2);
  s << M_PI, 0.0;
  bool captured = false;
  int capture_step = -1;
  double prev_energy = regulated(s);
  double peak_energy = prev_energy;
  int pump_steps = 0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd u = policy(s, t, rng);
    s = sdec::f_eval(env, s, u);
    // While pumping (far from upright) and below the target, the regulated
    // energy must climb toward its upright value.
    if (std::abs(sdec::wrap_angle(s(0))) > 0.35 && !captured) {
      const double e = regulated(s);
      if (prev_energy <= params.e_top) CHECK(e >= prev_energy - 0.02);
      prev_energy = e;
      peak_energy = std::max(peak_energy, e);
      ++pump_steps;
    }
    if (std::abs(sdec::wrap_angle(s(0))) <= 0.2 && std::abs(s(1)) <= 1.0) {
      captured = true;
      if (capture_step < 0) capture_step = t;
    }
  }
  CHECK(captured);
  CHECK(pump_steps > 10);
  CHECK(capture_step <= 200);
  CHECK(peak_energy >= 4.5);

  // Once captured, it stays captured: roll 100 more steps.
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd u = policy(s, t, rng);
    s = sdec::f_eval(env, s, u);
  }
  CHECK(std::abs(sdec::wrap_angle(s(0))) <= 0.2);
  CHECK(std::abs(s(1)) <= 1.0);
}

TEST_CASE("baseline policies respect the action box and the eval protocol") {
  const sdec::EnvModel env = sdec::make_env("pendulum");
  sdec::Rng rng = sdec::derive_stream(5, "bl-misc");

  Eigen::VectorXd s(2);
  s << 1.0, -2.0;
  const sdec::EnvPolicy zero = sdec::make_zero_policy(env);
  CHECK(zero(s, 0, rng).cwiseAbs().maxCoeff() == 0.0);

  const sdec::EnvPolicy uniform = sdec::make_uniform_policy(env);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd u = uniform(s, i, rng);
    CHECK(u(0) >= env.action_lo(0));
    CHECK(u(0) <= env.action_hi(0));
  }

  // run_baseline is evaluate_env_policy under the documented stream.
  const sdec::EvalStats direct = sdec::run_baseline(env, zero, 5, 17);
  sdec::Rng replay = sdec::derive_stream(17, "baseline", 0);
  const sdec::EvalStats manual =
      sdec::evaluate_env_policy(env, zero, 5, replay);
  CHECK(direct.mean == manual.mean);
  CHECK(direct.stddev == manual.stddev);
}

TEST_CASE("energy swing-up score band on the stochastic pendulum") {
  const sdec::EnvModel env = sdec::make_env("pendulum");
  const sdec::EvalStats stats =
      sdec::run_baseline(env, sdec::make_energy_swingup_policy(env), 20, 11);
  CHECK(stats.mean == doctest::Approx(-368.69).epsilon(5e-3));
  CHECK(stats.stddev < 50.0);
  CHECK(stats.mean > -1000.0);  // far better than hanging (about -1974)
}
