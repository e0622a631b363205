#pragma once

// Objective assembly: per-sample potential f_t, its gradient with respect to
// the amplitudes, the stacked potential energy and the balanced Hamiltonian
//
//   H(a) = rho * a'Ka + sum_t f_t(a)^2,
//   f_t  = max_i c(x_i) * |xdot_i|,
//
// evaluated on the sample grid t = 0..T/2. Ball velocities are taken with
// respect to the normalized phase tau = 2 pi t / T (the half period lasts pi),
// the same time scale the kinetic energy uses.

#include <cmath>
#include <optional>
#include <vector>

#include "hp/collision_field.hpp"
#include "hp/ffs_trajectory.hpp"
#include "hp/robot_model.hpp"
#include "hp/types.hpp"

namespace hp {

/// Arc-length weight of the obstacle term.
enum class WeightMode {
  velocity_norm,  // |xdot_i| (default)
  position_norm,  // |x_i|, the literal printed variant kept for comparison
};

/// Which amplitude gradient is stacked into the Gauss-Newton model.
enum class GradientForm {
  exact,       // d f_t / d a by the chain rule
  functional,  // projected obstacle-functional gradient with curvature term
};

struct PotentialOptions {
  WeightMode weight = WeightMode::velocity_norm;
  GradientForm gradient = GradientForm::exact;
  double eta = 1e-6;  // floor on |xdot|
};

struct PotentialContext {
  const RobotModel& robot;
  const CollisionField& field;
  SampleGrid grid;
  PotentialOptions options{};
};

/// Kinematic quantities of one sample that every per-ball term needs.
struct SampleKinematics {
  RowVec row;       // C_t cosine row
  RowVec row_rate;  // d/dtau
  RowVec row_accel; // d2/dtau2
  Vec theta;
  Vec theta_rate;
  ChainFrames frames;
};

inline SampleKinematics sample_kinematics(const AmplitudeMatrix& a, int t, const PotentialContext& ctx) {
  SampleKinematics k;
  k.row = cosine_row(t, ctx.grid.period(), a.harmonics());
  k.row_rate = phase_row_derivative(t, ctx.grid, a.harmonics(), 1);
  k.row_accel = phase_row_derivative(t, ctx.grid, a.harmonics(), 2);
  k.theta = a.matrix() * k.row.transpose();
  k.theta_rate = a.matrix() * k.row_rate.transpose();
  k.frames = chain_frames(ctx.robot, k.theta);
  return k;
}

struct SamplePotential {
  double value = 0.0;
  int ball = 0;  // maximizing ball, lowest index on ties
};

namespace detail {

inline double ball_weight(const BallState& state, const SampleKinematics& k, const PotentialOptions& opt) {
  if (opt.weight == WeightMode::position_norm) return state.center.norm();
  return std::max((state.jacobian * k.theta_rate).norm(), opt.eta);
}

}  // namespace detail

/// Per-ball products c_i * w_i at one sample.
inline std::vector<double> ball_potentials(const AmplitudeMatrix& a, int t, const PotentialContext& ctx) {
  const SampleKinematics k = sample_kinematics(a, t, ctx);
  std::vector<double> values;
  values.reserve(ctx.robot.balls().size());
  for (std::size_t i = 0; i < ctx.robot.balls().size(); ++i) {
    const BallState state = ball_state(ctx.robot, k.frames, i);
    const double c = ctx.field.cost(state.center, state.radius);
    values.push_back(c == 0.0 ? 0.0 : c * detail::ball_weight(state, k, ctx.options));
  }
  return values;
}

/// f_t = max over balls of c * w.
inline SamplePotential sample_potential(const AmplitudeMatrix& a, int t, const PotentialContext& ctx) {
  const std::vector<double> values = ball_potentials(a, t, ctx);
  SamplePotential out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > out.value) {
      out.value = values[i];
      out.ball = static_cast<int>(i);
    }
  }
  return out;
}

/// d f_t / d a holding the maximizing ball fixed (`ball`, or the argmax when empty).
inline Vec sample_potential_gradient(const AmplitudeMatrix& a, int t, const PotentialContext& ctx,
                                     std::optional<int> ball = std::nullopt) {
  const int i = ball ? *ball : sample_potential(a, t, ctx).ball;
  Vec grad = Vec::Zero(a.flat_size());
  if (ctx.robot.balls().empty()) return grad;
  const SampleKinematics k = sample_kinematics(a, t, ctx);
  const auto index = static_cast<std::size_t>(i);
  const BallState state = ball_state(ctx.robot, k.frames, index);
  const double c = ctx.field.cost(state.center, state.radius);
  const Vec3 dc = ctx.field.cost_gradient(state.center, state.radius);
  const double w = detail::ball_weight(state, k, ctx.options);

  grad += lift(state.jacobian.transpose() * (w * dc), k.row);
  if (c == 0.0) return grad;
  if (ctx.options.weight == WeightMode::position_norm) {
    const double n = state.center.norm();
    if (n > 0.0) grad += lift(state.jacobian.transpose() * (c / n * state.center), k.row);
    return grad;
  }
  const Vec3 xdot = state.jacobian * k.theta_rate;
  const double speed = xdot.norm();
  if (speed < ctx.options.eta) return grad;
  const Vec3 dir = xdot / speed;
  // |xdot| depends on a through theta_rate (J Cdot) and through J(theta) (rate term)
  const Mat rate = jacobian_rate(ctx.robot, k.frames, state, index, k.theta_rate);
  grad += lift(state.jacobian.transpose() * (c * dir), k.row_rate);
  grad += lift(rate.transpose() * (c * dir), k.row);
  return grad;
}

/// Workspace bracket [(I - u u') grad c - c kappa] of the projected obstacle
/// functional, with u = xdot/|xdot| and kappa = |xdot|^-2 (I - u u') xddot,
/// xddot ~ J Cddot a. The curvature part is dropped when |xdot| < eta.
inline Vec3 functional_bracket(const Vec3& xdot, const Vec3& xddot, double c, const Vec3& dc, double eta) {
  const double speed = xdot.norm();
  if (speed < eta) return dc;
  const Vec3 u = xdot / speed;
  const Mat3 proj = Mat3::Identity() - u * u.transpose();
  const Vec3 kappa = proj * xddot / (speed * speed);
  return proj * dc - c * kappa;
}

/// Projected obstacle-functional gradient for one sample, scaled by 1/(T/2+1).
inline Vec sample_functional_gradient(const AmplitudeMatrix& a, int t, const PotentialContext& ctx,
                                      std::optional<int> ball = std::nullopt) {
  const int i = ball ? *ball : sample_potential(a, t, ctx).ball;
  Vec grad = Vec::Zero(a.flat_size());
  if (ctx.robot.balls().empty()) return grad;
  const SampleKinematics k = sample_kinematics(a, t, ctx);
  const BallState state = ball_state(ctx.robot, k.frames, static_cast<std::size_t>(i));
  const double c = ctx.field.cost(state.center, state.radius);
  const Vec3 dc = ctx.field.cost_gradient(state.center, state.radius);
  const Vec3 xdot = state.jacobian * k.theta_rate;
  const Vec3 xddot = state.jacobian * (a.matrix() * k.row_accel.transpose());
  const double w = std::max(xdot.norm(), ctx.options.eta);
  const Vec3 bracket = functional_bracket(xdot, xddot, c, dc, ctx.options.eta);
  grad = lift(state.jacobian.transpose() * (w * bracket), k.row) / static_cast<double>(ctx.grid.size());
  return grad;
}

struct PotentialEval {
  double total = 0.0;        // sum_t f_t^2
  Vec f;                     // (T/2+1)
  Mat F;                     // (T/2+1) x M(N+1), row t = d f_t / d a
  std::vector<int> argmax_ball;
};

inline PotentialEval potential_energy(const AmplitudeMatrix& a, const PotentialContext& ctx) {
  const int samples = ctx.grid.size();
  PotentialEval eval{0.0, Vec::Zero(samples), Mat::Zero(samples, a.flat_size()),
                     std::vector<int>(static_cast<std::size_t>(samples), 0)};
  for (int t = 0; t < samples; ++t) {
    const SamplePotential sp = sample_potential(a, t, ctx);
    eval.f(t) = sp.value;
    eval.argmax_ball[static_cast<std::size_t>(t)] = sp.ball;
    if (sp.value == 0.0) continue;
    eval.F.row(t) = (ctx.options.gradient == GradientForm::exact ? sample_potential_gradient(a, t, ctx, sp.ball)
                                                                 : sample_functional_gradient(a, t, ctx, sp.ball))
                        .transpose();
  }
  eval.total = eval.f.squaredNorm();
  return eval;
}

inline double hamiltonian(const AmplitudeMatrix& a, double rho, const PotentialContext& ctx) {
  return rho * kinetic_energy(a) + potential_energy(a, ctx).total;
}

}  // namespace hp
