#include "sdec/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace sdec {
namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

void apply_wrap_clip(const EnvModel& env, Eigen::VectorXd& s) {
  for (int i : env.angle_indices) s(i) = wrap_angle(s(i));
  s = s.cwiseMax(env.state_lo).cwiseMin(env.state_hi);
}

void check_state(const EnvModel& env, const Eigen::VectorXd& s,
                 const char* who) {
  if (s.size() != env.state_dim)
    throw std::invalid_argument(std::string(who) + ": state size mismatch for " +
                                env.name);
  if (!s.allFinite())
    throw std::invalid_argument(std::string(who) + ": non-finite state");
}

}  // namespace

double wrap_angle(double theta) {
  double w = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (w <= 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

std::pair<Eigen::VectorXd, bool> clip_action(const EnvModel& env,
                                             const Eigen::VectorXd& a) {
  if (a.size() != env.action_dim)
    throw std::invalid_argument("clip_action: action size mismatch for " +
                                env.name);
  if (!a.allFinite())
    throw std::invalid_argument("clip_action: non-finite action");
  Eigen::VectorXd clipped = a.cwiseMax(env.action_lo).cwiseMin(env.action_hi);
  return {clipped, (clipped - a).cwiseAbs().maxCoeff() > 0.0};
}

Eigen::VectorXd f_eval(const EnvModel& env, const Eigen::VectorXd& s,
                       const Eigen::VectorXd& a) {
  check_state(env, s, "f_eval");
  Eigen::VectorXd next = env.step_raw(s, clip_action(env, a).first);
  apply_wrap_clip(env, next);
  return next;
}

double env_reward(const EnvModel& env, const Eigen::VectorXd& s,
                  const Eigen::VectorXd& a) {
  check_state(env, s, "env_reward");
  return env.reward_raw(s, clip_action(env, a).first);
}

Eigen::VectorXd env_step(const EnvModel& env, const Eigen::VectorXd& s,
                         const Eigen::VectorXd& a, Rng& rng) {
  Eigen::VectorXd next = f_eval(env, s, a);
  if (env.sigma_noise > 0.0) {
    if (env.noise_target == NoiseTarget::kFullState) {
      for (int i = 0; i < env.state_dim; ++i)
        next(i) += env.sigma_noise * rng.normal();
    } else {
      const double scale = env.sigma_noise * std::sqrt(env.dt);
      for (int i : env.velocity_indices) next(i) += scale * rng.normal();
    }
    apply_wrap_clip(env, next);
  }
  return next;
}

Eigen::VectorXd sample_initial_state(const EnvModel& env, Rng& rng) {
  Eigen::VectorXd s = env.init_nominal;
  for (int i = 0; i < env.state_dim; ++i)
    s(i) += rng.uniform(-env.init_spread, env.init_spread);
  apply_wrap_clip(env, s);
  return s;
}

Trajectory rollout(const EnvModel& env, const EnvPolicy& policy, int horizon,
                   Rng& rng, double gamma) {
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("rollout: gamma must be in [0, 1]");
  Trajectory traj;
  traj.states.resize(horizon + 1, env.state_dim);
  traj.actions.resize(horizon, env.action_dim);
  traj.rewards.resize(horizon);
  Eigen::VectorXd s = sample_initial_state(env, rng);
  double discount = 1.0;
  traj.undiscounted = 0.0;
  traj.discounted = 0.0;
  for (int t = 0; t < horizon; ++t) {
    traj.states.row(t) = s.transpose();
    const Eigen::VectorXd a = clip_action(env, policy(s, t, rng)).first;
    traj.actions.row(t) = a.transpose();
    const double r = env_reward(env, s, a);
    traj.rewards(t) = r;
    traj.undiscounted += r;
    traj.discounted += discount * r;
    discount *= gamma;
    s = env_step(env, s, a, rng);
  }
  traj.states.row(horizon) = s.transpose();
  return traj;
}

SampleBatch collect_stationary_batch(const EnvModel& env,
                                     const EnvPolicy& policy, int n,
                                     int burn_in, int stride, Rng& rng,
                                     const std::string& policy_id) {
  if (n < 1) throw std::invalid_argument("collect_stationary_batch: n >= 1");
  if (burn_in < 0 || stride < 1)
    throw std::invalid_argument(
        "collect_stationary_batch: burn_in >= 0 and stride >= 1 required");
  SampleBatch batch;
  batch.s.resize(n, env.state_dim);
  batch.a.resize(n, env.action_dim);
  batch.s_next.resize(n, env.state_dim);
  batch.a_next.resize(n, env.action_dim);
  batch.r.resize(n);
  batch.policy_id = policy_id;
  batch.burn_in = burn_in;
  batch.stride = stride;

  // Burn-in counts stream steps, not episodes; restarts keep recording.
  Eigen::VectorXd s = sample_initial_state(env, rng);
  int episode_t = 0;
  long stream_t = 0;
  int recorded = 0;
  while (recorded < n) {
    const Eigen::VectorXd a = clip_action(env, policy(s, episode_t, rng)).first;
    const double r = env_reward(env, s, a);
    const Eigen::VectorXd s_next = env_step(env, s, a, rng);
    if (stream_t >= burn_in && (stream_t - burn_in) % stride == 0) {
      const Eigen::VectorXd a_next =
          clip_action(env, policy(s_next, episode_t + 1, rng)).first;
      batch.s.row(recorded) = s.transpose();
      batch.a.row(recorded) = a.transpose();
      batch.r(recorded) = r;
      batch.s_next.row(recorded) = s_next.transpose();
      batch.a_next.row(recorded) = a_next.transpose();
      ++recorded;
    }
    ++stream_t;
    ++episode_t;
    if (episode_t >= env.horizon) {
      s = sample_initial_state(env, rng);
      episode_t = 0;
    } else {
      s = s_next;
    }
  }
  return batch;
}

EvalStats evaluate_env_policy(const EnvModel& env, const EnvPolicy& policy,
                              int episodes, Rng& rng) {
  if (episodes < 1)
    throw std::invalid_argument("evaluate_env_policy: episodes >= 1");
  Eigen::VectorXd returns(episodes);
  for (int e = 0; e < episodes; ++e)
    returns(e) = rollout(env, policy, env.horizon, rng, 1.0).undiscounted;
  EvalStats stats;
  stats.mean = returns.mean();
  stats.stddev = episodes == 1
                     ? 0.0
                     : std::sqrt((returns.array() - stats.mean).square().sum() /
                                 episodes);
  return stats;
}

EnvModel make_pendulum() {
  EnvModel env;
  env.name = "pendulum";
  env.state_dim = 2;
  env.action_dim = 1;
  env.action_lo = Eigen::VectorXd::Constant(1, -2.0);
  env.action_hi = Eigen::VectorXd::Constant(1, 2.0);
  env.dt = 0.05;
  env.horizon = 200;
  env.state_lo = vec2(-M_PI, -8.0);
  env.state_hi = vec2(M_PI, 8.0);
  env.angle_indices = {0};
  env.velocity_indices = {1};
  env.init_nominal = vec2(M_PI, 0.0);
  env.init_spread = 0.1;
  env.c_f = env.state_hi.norm();
  env.c_r = M_PI * M_PI + 0.1 * 64.0 + 0.001 * 4.0;
  const double dt = env.dt;
  env.step_raw = [dt](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double theta_ddot = 15.0 * std::sin(s(0)) + 3.0 * a(0);
    const double vel = std::clamp(s(1) + dt * theta_ddot, -8.0, 8.0);
    return vec2(s(0) + dt * vel, vel);
  };
  env.reward_raw = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double th = wrap_angle(s(0));
    return -(th * th + 0.1 * s(1) * s(1) + 0.001 * a(0) * a(0));
  };
  // Rod about its end: E = (1/6) m l^2 w^2 + (m g l / 2) cos(theta).
  env.energy = [](const Eigen::VectorXd& s) {
    return s(1) * s(1) / 6.0 + 5.0 * std::cos(s(0));
  };
  return env;
}

EnvModel make_cartpole() {
  EnvModel env;
  env.name = "cartpole";
  env.state_dim = 4;
  env.action_dim = 1;
  env.action_lo = Eigen::VectorXd::Constant(1, -10.0);
  env.action_hi = Eigen::VectorXd::Constant(1, 10.0);
  env.dt = 0.02;
  env.horizon = 500;
  env.state_lo.resize(4);
  env.state_hi.resize(4);
  env.state_lo << -3.0, -10.0, -M_PI, -10.0;
  env.state_hi << 3.0, 10.0, M_PI, 10.0;
  env.angle_indices = {2};
  env.velocity_indices = {1, 3};
  env.init_nominal.resize(4);
  env.init_nominal << 0.0, 0.0, M_PI, 0.0;
  env.init_spread = 0.1;
  env.c_f = env.state_hi.norm();
  env.c_r = M_PI * M_PI + 0.1 * 100.0 + 0.05 * 9.0 + 0.001 * 100.0;
  const double dt = env.dt;
  env.step_raw = [dt](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    constexpr double g = 9.8, m_c = 1.0, m_p = 0.1, l = 0.5;
    const double sin_t = std::sin(s(2)), cos_t = std::cos(s(2));
    const double temp =
        (a(0) + m_p * l * s(3) * s(3) * sin_t) / (m_c + m_p);
    const double theta_ddot =
        (g * sin_t - cos_t * temp) /
        (l * (4.0 / 3.0 - m_p * cos_t * cos_t / (m_c + m_p)));
    const double x_ddot = temp - m_p * l * theta_ddot * cos_t / (m_c + m_p);
    Eigen::VectorXd next(4);
    next(1) = std::clamp(s(1) + dt * x_ddot, -10.0, 10.0);
    next(3) = std::clamp(s(3) + dt * theta_ddot, -10.0, 10.0);
    next(0) = s(0) + dt * next(1);
    next(2) = s(2) + dt * next(3);
    return next;
  };
  env.reward_raw = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double th = wrap_angle(s(2));
    return -(th * th + 0.1 * s(3) * s(3) + 0.05 * s(0) * s(0) +
             0.001 * a(0) * a(0));
  };
  return env;
}

EnvModel make_pendubot() {
  EnvModel env;
  env.name = "pendubot";
  env.state_dim = 4;
  env.action_dim = 1;
  env.action_lo = Eigen::VectorXd::Constant(1, -5.0);
  env.action_hi = Eigen::VectorXd::Constant(1, 5.0);
  env.dt = 0.01;
  env.horizon = 400;
  env.state_lo.resize(4);
  env.state_hi.resize(4);
  env.state_lo << -M_PI, -M_PI, -10.0, -10.0;
  env.state_hi << M_PI, M_PI, 10.0, 10.0;
  env.angle_indices = {0, 1};
  env.velocity_indices = {2, 3};
  env.init_nominal = Eigen::VectorXd::Zero(4);
  env.init_spread = 0.05;
  env.c_f = env.state_hi.norm();
  env.c_r = 2.0 * M_PI * M_PI + 0.1 * 200.0 + 0.001 * 25.0;
  const double dt = env.dt;
  env.step_raw = [dt](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    // Two-link arm, torque on the shoulder, point masses at the link
    // centers, angles measured from upright (gravity destabilizes).
    constexpr double g = 9.8, m2 = 1.0, l1 = 1.0, lc1 = 0.5, lc2 = 0.5;
    constexpr double i1 = 0.25, i2 = 0.25;  // m lc^2 about the joints
    const double c2 = std::cos(s(1)), s2v = std::sin(s(1));
    const double s1v = std::sin(s(0)), s12 = std::sin(s(0) + s(1));
    const double m11 = i1 + i2 + m2 * l1 * l1 + 2.0 * m2 * l1 * lc2 * c2;
    const double m12 = i2 + m2 * l1 * lc2 * c2;
    const double m22 = i2;
    const double q1d = s(2), q2d = s(3);
    const double h = m2 * l1 * lc2 * s2v;
    const double cor1 = -2.0 * h * q1d * q2d - h * q2d * q2d;
    const double cor2 = h * q1d * q1d;
    const double grav1 = (1.0 * lc1 + m2 * l1) * g * s1v + m2 * lc2 * g * s12;
    const double grav2 = m2 * lc2 * g * s12;
    const double rhs1 = a(0) - cor1 + grav1;
    const double rhs2 = -cor2 + grav2;
    const double det = m11 * m22 - m12 * m12;
    const double q1dd = (m22 * rhs1 - m12 * rhs2) / det;
    const double q2dd = (m11 * rhs2 - m12 * rhs1) / det;
    Eigen::VectorXd next(4);
    next(2) = std::clamp(q1d + dt * q1dd, -10.0, 10.0);
    next(3) = std::clamp(q2d + dt * q2dd, -10.0, 10.0);
    next(0) = s(0) + dt * next(2);
    next(1) = s(1) + dt * next(3);
    return next;
  };
  env.reward_raw = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double q1 = wrap_angle(s(0)), q2 = wrap_angle(s(1));
    return -(q1 * q1 + q2 * q2 + 0.1 * (s(2) * s(2) + s(3) * s(3)) +
             0.001 * a(0) * a(0));
  };
  return env;
}

EnvModel make_drone2d() {
  EnvModel env;
  env.name = "drone2d";
  env.state_dim = 6;
  env.action_dim = 2;
  env.action_lo = Eigen::VectorXd::Constant(2, 0.0);
  env.action_hi = Eigen::VectorXd::Constant(2, 10.0);
  env.dt = 0.02;
  env.horizon = 300;
  env.state_lo.resize(6);
  env.state_hi.resize(6);
  env.state_lo << -5.0, -5.0, -10.0, -10.0, -M_PI, -10.0;
  env.state_hi << 5.0, 5.0, 10.0, 10.0, M_PI, 10.0;
  env.angle_indices = {4};
  env.velocity_indices = {2, 3, 5};
  env.init_nominal = Eigen::VectorXd::Zero(6);
  env.init_spread = 0.1;
  env.c_f = env.state_hi.norm();
  env.c_r = 2.0 * 25.0 + 0.1 * 300.0 + M_PI * M_PI + 0.001 * 50.0;
  const double dt = env.dt;
  env.step_raw = [dt](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    constexpr double g = 10.0, mass = 1.0, arm = 0.3, inertia = 0.05;
    const double thrust = a(0) + a(1);
    const double x_ddot = -thrust * std::sin(s(4)) / mass;
    const double y_ddot = thrust * std::cos(s(4)) / mass - g;
    const double phi_ddot = (a(1) - a(0)) * arm / inertia;
    Eigen::VectorXd next(6);
    next(2) = std::clamp(s(2) + dt * x_ddot, -10.0, 10.0);
    next(3) = std::clamp(s(3) + dt * y_ddot, -10.0, 10.0);
    next(5) = std::clamp(s(5) + dt * phi_ddot, -10.0, 10.0);
    next(0) = s(0) + dt * next(2);
    next(1) = s(1) + dt * next(3);
    next(4) = s(4) + dt * next(5);
    return next;
  };
  env.reward_raw = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double phi = wrap_angle(s(4));
    const double hover = 5.0;
    return -(s(0) * s(0) + s(1) * s(1) +
             0.1 * (s(2) * s(2) + s(3) * s(3) + s(5) * s(5)) + phi * phi +
             0.001 * ((a(0) - hover) * (a(0) - hover) +
                      (a(1) - hover) * (a(1) - hover)));
  };
  return env;
}

EnvModel make_env(const std::string& name) {
  if (name == "pendulum") return make_pendulum();
  if (name == "cartpole") return make_cartpole();
  if (name == "pendubot") return make_pendubot();
  if (name == "drone2d") return make_drone2d();
  throw std::invalid_argument("make_env: unknown environment '" + name + "'");
}

}  // namespace sdec
