#include "sdec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "sdec/oracles.hpp"
#include "sdec/rng.hpp"

namespace sdec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRegFloor = 1e-9;
constexpr int kLineSearchSteps = 11;  // alpha = 1, 1/2, ..., 2^-10

// Nonnegative log barrier on the action box, zero at the midpoint, +inf
// outside the open box.
double action_barrier(const EnvModel& env, const Eigen::VectorXd& u) {
  double total = 0.0;
  for (int j = 0; j < env.action_dim; ++j) {
    const double lo = env.action_lo(j);
    const double hi = env.action_hi(j);
    if (!(u(j) > lo && u(j) < hi)) return kInf;
    const double half = 0.5 * (hi - lo);
    total -= std::log((u(j) - lo) / half) + std::log((hi - u(j)) / half);
  }
  return total;
}

// Raw (barrier-free) cost and barrier total of a trajectory, kept separate
// so reweighting the barrier never has to re-walk the trajectory.
struct TrajCost {
  double raw = 0.0;
  double barrier = 0.0;

  double at(double weight) const { return raw + weight * barrier; }
};

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

Eigen::VectorXd fd_gradient(const ScalarFn& fn, const Eigen::VectorXd& z,
                            double step) {
  Eigen::VectorXd g(z.size());
  Eigen::VectorXd zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    zp(i) = z(i) + step;
    const double up = fn(zp);
    zp(i) = z(i) - step;
    const double dn = fn(zp);
    zp(i) = z(i);
    g(i) = (up - dn) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const ScalarFn& fn, const Eigen::VectorXd& z,
                           double step) {
  const Eigen::Index dim = z.size();
  const double center = fn(z);
  Eigen::MatrixXd hess(dim, dim);
  Eigen::VectorXd zp = z;
  for (Eigen::Index i = 0; i < dim; ++i) {
    zp(i) = z(i) + step;
    const double up = fn(zp);
    zp(i) = z(i) - step;
    const double dn = fn(zp);
    zp(i) = z(i);
    hess(i, i) = (up + dn - 2.0 * center) / (step * step);
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      zp(i) = z(i) + step;
      zp(j) = z(j) + step;
      const double pp = fn(zp);
      zp(j) = z(j) - step;
      const double pm = fn(zp);
      zp(i) = z(i) - step;
      const double mm = fn(zp);
      zp(j) = z(j) + step;
      const double mp = fn(zp);
      zp(i) = z(i);
      zp(j) = z(j);
      hess(i, j) = hess(j, i) = (pp + mm - pm - mp) / (4.0 * step * step);
    }
  }
  return hess;
}

struct StageDerivs {
  Eigen::MatrixXd fx, fu;
  Eigen::VectorXd cx, cu;
  Eigen::MatrixXd cxx, cuu, cux;
};

StageDerivs stage_derivatives(const EnvModel& env, double barrier_w,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u,
                              const IlqrConfig& cfg) {
  const int n = env.state_dim;
  const int m = env.action_dim;
  StageDerivs d;
  d.fx.resize(n, n);
  d.fu.resize(n, m);
  Eigen::VectorXd xp = x;
  for (int j = 0; j < n; ++j) {
    xp(j) = x(j) + cfg.jac_step;
    const Eigen::VectorXd up = env.step_raw(xp, u);
    xp(j) = x(j) - cfg.jac_step;
    const Eigen::VectorXd dn = env.step_raw(xp, u);
    xp(j) = x(j);
    d.fx.col(j) = (up - dn) / (2.0 * cfg.jac_step);
  }
  Eigen::VectorXd uq = u;
  for (int j = 0; j < m; ++j) {
    uq(j) = u(j) + cfg.jac_step;
    const Eigen::VectorXd up = env.step_raw(x, uq);
    uq(j) = u(j) - cfg.jac_step;
    const Eigen::VectorXd dn = env.step_raw(x, uq);
    uq(j) = u(j);
    d.fu.col(j) = (up - dn) / (2.0 * cfg.jac_step);
  }

  // Finite differences see only the smooth negated reward; the barrier's
  // derivatives are added analytically, which stays accurate arbitrarily
  // close to the box faces where a difference stencil would step outside.
  const ScalarFn raw = [&](const Eigen::VectorXd& z) {
    return -env.reward_raw(z.head(n), z.tail(m));
  };
  Eigen::VectorXd z0(n + m);
  z0 << x, u;
  const Eigen::VectorXd grad = fd_gradient(raw, z0, cfg.jac_step);
  const Eigen::MatrixXd hess = fd_hessian(raw, z0, cfg.hess_step);
  d.cx = grad.head(n);
  d.cu = grad.tail(m);
  d.cxx = hess.topLeftCorner(n, n);
  d.cuu = hess.bottomRightCorner(m, m);
  d.cux = hess.bottomLeftCorner(m, n);
  if (barrier_w > 0.0) {
    for (int j = 0; j < m; ++j) {
      const double below = u(j) - env.action_lo(j);
      const double above = env.action_hi(j) - u(j);
      d.cu(j) += barrier_w * (1.0 / above - 1.0 / below);
      d.cuu(j, j) +=
          barrier_w * (1.0 / (below * below) + 1.0 / (above * above));
    }
  }
  return d;
}

bool backward_pass(const std::vector<StageDerivs>& derivs,
                   const Eigen::VectorXd& vx_term,
                   const Eigen::MatrixXd& vxx_term, double reg,
                   std::vector<Eigen::VectorXd>& ff,
                   std::vector<Eigen::MatrixXd>& fb) {
  Eigen::VectorXd vx = vx_term;
  Eigen::MatrixXd vxx = vxx_term;
  for (int t = static_cast<int>(derivs.size()) - 1; t >= 0; --t) {
    const StageDerivs& d = derivs[static_cast<std::size_t>(t)];
    const Eigen::VectorXd qx = d.cx + d.fx.transpose() * vx;
    const Eigen::VectorXd qu = d.cu + d.fu.transpose() * vx;
    const Eigen::MatrixXd qxx = d.cxx + d.fx.transpose() * vxx * d.fx;
    const Eigen::MatrixXd quu = d.cuu + d.fu.transpose() * vxx * d.fu;
    const Eigen::MatrixXd qux = d.cux + d.fu.transpose() * vxx * d.fx;
    Eigen::MatrixXd quu_reg = 0.5 * (quu + quu.transpose());
    quu_reg.diagonal().array() += reg;
    const Eigen::LLT<Eigen::MatrixXd> llt(quu_reg);
    if (llt.info() != Eigen::Success) return false;
    ff[static_cast<std::size_t>(t)] = -llt.solve(qu);
    fb[static_cast<std::size_t>(t)] = -llt.solve(qux);
    const Eigen::VectorXd& k = ff[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd& big_k = fb[static_cast<std::size_t>(t)];
    vx = qx + big_k.transpose() * (quu * k + qu) + qux.transpose() * k;
    vxx = qxx + big_k.transpose() * quu * big_k + big_k.transpose() * qux +
          qux.transpose() * big_k;
    vxx = 0.5 * (vxx + vxx.transpose());
  }
  return true;
}

struct Rollout {
  Eigen::MatrixXd xs, us;
  TrajCost cost;
  bool feasible = false;
};

Rollout closed_loop_rollout(const EnvModel& env, const Eigen::MatrixXd& xs_ref,
                            const Eigen::MatrixXd& us_ref,
                            const std::vector<Eigen::VectorXd>& ff,
                            const std::vector<Eigen::MatrixXd>& fb,
                            double alpha, double barrier_w,
                            const Eigen::VectorXd& a_mid) {
  const Eigen::Index h = us_ref.rows();
  Rollout out;
  out.xs.resize(h + 1, xs_ref.cols());
  out.us.resize(h, us_ref.cols());
  out.xs.row(0) = xs_ref.row(0);
  for (Eigen::Index t = 0; t < h; ++t) {
    const Eigen::VectorXd dx = (out.xs.row(t) - xs_ref.row(t)).transpose();
    const Eigen::VectorXd u = us_ref.row(t).transpose() +
                              alpha * ff[static_cast<std::size_t>(t)] +
                              fb[static_cast<std::size_t>(t)] * dx;
    out.us.row(t) = u.transpose();
    const double b = barrier_w > 0.0 ? action_barrier(env, u) : 0.0;
    if (!std::isfinite(b)) return out;  // stepped outside the box
    out.cost.barrier += b;
    out.cost.raw -= env.reward_raw(out.xs.row(t).transpose(), u);
    out.xs.row(t + 1) =
        env.step_raw(out.xs.row(t).transpose(), u).transpose();
    if (!out.xs.row(t + 1).allFinite()) return out;
  }
  out.cost.raw -= env.reward_raw(out.xs.row(h).transpose(), a_mid);
  out.feasible = std::isfinite(out.cost.raw);
  return out;
}

}  // namespace

IlqrSolution ilqr_solve(const EnvModel& env, const Eigen::VectorXd& x0,
                        const Eigen::MatrixXd& u_init, const IlqrConfig& cfg) {
  if (x0.size() != env.state_dim) {
    throw std::invalid_argument("ilqr_solve: x0 has the wrong dimension");
  }
  if (u_init.cols() != env.action_dim || u_init.rows() < 1) {
    throw std::invalid_argument("ilqr_solve: bad control sequence shape");
  }
  if (cfg.max_iterations < 1 || cfg.barrier_weight < 0.0 ||
      cfg.reg_init <= 0.0) {
    throw std::invalid_argument("ilqr_solve: bad configuration");
  }
  const Eigen::Index h = u_init.rows();
  const int n = env.state_dim;
  const int m = env.action_dim;
  const Eigen::VectorXd a_mid = 0.5 * (env.action_lo + env.action_hi);

  double barrier_w = cfg.barrier_weight;
  std::vector<Eigen::VectorXd> ff(static_cast<std::size_t>(h),
                                  Eigen::VectorXd::Zero(m));
  std::vector<Eigen::MatrixXd> fb(static_cast<std::size_t>(h),
                                  Eigen::MatrixXd::Zero(m, n));

  // With zero gains and alpha = 0 the closed-loop rollout reduces to the
  // open-loop u_init trajectory; only row 0 of the state reference is read.
  Eigen::MatrixXd x_seed = Eigen::MatrixXd::Zero(h + 1, n);
  x_seed.row(0) = x0.transpose();
  Rollout current =
      closed_loop_rollout(env, x_seed, u_init, ff, fb, 0.0, barrier_w, a_mid);
  IlqrSolution sol;
  if (!current.feasible) {
    throw std::invalid_argument(
        "ilqr_solve: initial controls must lie strictly inside the action box "
        "and produce finite states");
  }
  sol.cost_per_iteration.push_back(current.cost.at(barrier_w));

  double reg = cfg.reg_init;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::vector<StageDerivs> derivs;
    derivs.reserve(static_cast<std::size_t>(h));
    for (Eigen::Index t = 0; t < h; ++t) {
      derivs.push_back(stage_derivatives(env, barrier_w,
                                         current.xs.row(t).transpose(),
                                         current.us.row(t).transpose(), cfg));
    }
    const ScalarFn terminal = [&](const Eigen::VectorXd& x) {
      return -env.reward_raw(x, a_mid);
    };
    const Eigen::VectorXd x_term = current.xs.row(h).transpose();
    const Eigen::VectorXd vx_term = fd_gradient(terminal, x_term, cfg.jac_step);
    const Eigen::MatrixXd vxx_term = fd_hessian(terminal, x_term, cfg.hess_step);

    bool solved = false;
    while (reg <= cfg.reg_max) {
      if (backward_pass(derivs, vx_term, vxx_term, reg, ff, fb)) {
        solved = true;
        break;
      }
      reg *= 10.0;
    }
    if (!solved) break;
    const double reg_used = reg;

    const double before = current.cost.at(barrier_w);
    bool improved = false;
    double improvement = 0.0;
    for (int step = 0; step < kLineSearchSteps; ++step) {
      const Rollout trial =
          closed_loop_rollout(env, current.xs, current.us, ff, fb,
                              std::pow(0.5, step), barrier_w, a_mid);
      if (!trial.feasible) continue;
      const double total = trial.cost.at(barrier_w);
      if (total < before - 1e-12 * (1.0 + std::abs(before))) {
        improvement = before - total;
        current = trial;
        improved = true;
        break;
      }
    }
    if (improved) {
      reg = std::max(reg * 0.5, kRegFloor);
    } else {
      reg *= 10.0;
    }

    // Relax the barrier; raw >= 0 barriers make this a pure cost decrease.
    const bool barrier_settled =
        barrier_w == 0.0 || barrier_w <= cfg.barrier_floor;
    if (barrier_w > 0.0) {
      barrier_w = std::max(0.5 * barrier_w, cfg.barrier_floor);
    }
    sol.cost_per_iteration.push_back(current.cost.at(barrier_w));

    if (improved && barrier_settled &&
        improvement <= cfg.cost_tol * (1.0 + std::abs(before))) {
      sol.converged = true;
      break;
    }
    // Stationary point: an undamped backward pass produced a negligible
    // feedforward and the line search found nothing better. Without this exit
    // an already-optimal trajectory would escalate reg until the stored gains
    // are damped to zero.
    if (!improved && barrier_settled && reg_used <= 100.0 * kRegFloor) {
      double ff_inf = 0.0;
      for (const Eigen::VectorXd& k : ff) {
        ff_inf = std::max(ff_inf, k.lpNorm<Eigen::Infinity>());
      }
      const double u_inf = current.us.size() > 0
                               ? current.us.cwiseAbs().maxCoeff()
                               : 0.0;
      if (ff_inf <= 1e-8 * (1.0 + u_inf)) {
        sol.converged = true;
        break;
      }
    }
    if (!improved && reg > cfg.reg_max) break;
  }

  sol.states = current.xs;
  sol.controls = current.us;
  sol.feedback = fb;
  sol.feedforward = ff;
  return sol;
}

EnvPolicy make_ilqr_policy(const EnvModel& env, const IlqrSolution& solution) {
  const std::vector<int> angles = env.angle_indices;
  const int last = static_cast<int>(solution.controls.rows()) - 1;
  return [solution, angles, last](const Eigen::VectorXd& x, int t,
                                  Rng&) -> Eigen::VectorXd {
    const int tt = std::clamp(t, 0, last);
    Eigen::VectorXd dx = x - solution.states.row(tt).transpose();
    for (int j : angles) dx(j) = wrap_angle(dx(j));
    return solution.controls.row(tt).transpose() +
           solution.feedforward[static_cast<std::size_t>(tt)] +
           solution.feedback[static_cast<std::size_t>(tt)] * dx;
  };
}

EnergySwingupParams make_energy_swingup(const EnvModel& pendulum) {
  if (pendulum.state_dim != 2 || pendulum.action_dim != 1) {
    throw std::invalid_argument(
        "make_energy_swingup: expects the (theta, theta_dot) pendulum");
  }
  EnergySwingupParams params;
  params.u_max = pendulum.action_hi(0);
  const double dt = pendulum.dt;
  params.shadow_coeff = 2.5 * dt;
  // Semi-implicit Euler linearization of theta_ddot = 15 sin(theta) + 3u
  // about the upright equilibrium.
  Eigen::MatrixXd a(2, 2);
  a << 1.0 + 15.0 * dt * dt, dt, 15.0 * dt, 1.0;
  Eigen::MatrixXd b(2, 1);
  b << 3.0 * dt * dt, 3.0 * dt;
  Eigen::MatrixXd q = Eigen::Vector2d(1.0, 0.1).asDiagonal();
  Eigen::MatrixXd r(1, 1);
  r << 0.001;
  const oracles::RiccatiSolution ric =
      oracles::riccati_finite_horizon(a, b, q, r, 400);
  params.lqr_gain = ric.gain.front();
  return params;
}

Eigen::VectorXd energy_swingup_action(const EnergySwingupParams& params,
                                      const Eigen::VectorXd& s) {
  const double theta = wrap_angle(s(0));
  const double theta_dot = s(1);
  double u;
  if (std::abs(theta) <= params.theta_switch) {
    u = -(params.lqr_gain(0) * theta + params.lqr_gain(1) * theta_dot);
  } else {
    // Regulate the modified energy the semi-implicit integrator conserves,
    // not the continuous one: the raw formula oscillates by ~(dt/2) 5
    // theta_dot sin(theta) along a discrete orbit, reading high at the
    // bottom and low at the apex. Regulating it to e_top parks the apex
    // just short of the LQR gate; the corrected value does not.
    const double energy = theta_dot * theta_dot / 6.0 +
                          5.0 * std::cos(theta) +
                          params.shadow_coeff * theta_dot * std::sin(theta);
    // dE/dt = u * theta_dot, so this pumps energy monotonically toward
    // e_top. sign(0) := +1 supplies the kick out of a resting start.
    const double direction = theta_dot >= 0.0 ? 1.0 : -1.0;
    u = params.k_energy * (params.e_top - energy) * direction;
  }
  u = std::clamp(u, -params.u_max, params.u_max);
  return Eigen::VectorXd::Constant(1, u);
}

EnvPolicy make_energy_swingup_policy(const EnvModel& pendulum) {
  const EnergySwingupParams params = make_energy_swingup(pendulum);
  return [params](const Eigen::VectorXd& s, int /*t*/,
                  Rng& /*rng*/) -> Eigen::VectorXd {
    return energy_swingup_action(params, s);
  };
}

EnvPolicy make_zero_policy(const EnvModel& env) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(env.action_dim);
  return [zero](const Eigen::VectorXd&, int, Rng&) { return zero; };
}

EnvPolicy make_uniform_policy(const EnvModel& env) {
  const Eigen::VectorXd lo = env.action_lo;
  const Eigen::VectorXd hi = env.action_hi;
  return [lo, hi](const Eigen::VectorXd&, int, Rng& rng) -> Eigen::VectorXd {
    Eigen::VectorXd u(lo.size());
    for (Eigen::Index j = 0; j < lo.size(); ++j) {
      u(j) = lo(j) + (hi(j) - lo(j)) * rng.uniform();
    }
    return u;
  };
}

EvalStats run_baseline(const EnvModel& env, const EnvPolicy& policy,
                       int episodes, std::uint64_t seed) {
  Rng rng = derive_stream(seed, "baseline", 0);
  return evaluate_env_policy(env, policy, episodes, rng);
}

}  // namespace sdec
