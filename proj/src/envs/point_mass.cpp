#include "ecc/envs/point_mass.hpp"

#include <algorithm>

#include "ecc/error.hpp"

namespace ecc::envs {

namespace {

DomainSpec point_mass_spec(const PointMassParams& p, std::string name) {
  DomainSpec s;
  s.name = std::move(name);
  s.state_dim = 6;
  s.action_dim = 2;
  s.action_lo = Vector::Constant(2, -1.0);
  s.action_hi = Vector::Constant(2, 1.0);
  s.horizon = p.horizon;
  s.dt = p.dt;
  return s;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

Matrix pseudo_inverse(const Matrix& m) { return m.completeOrthogonalDecomposition().pseudoInverse(); }

PointMass::PointMass(PointMassParams params, std::string name)
    : Env(point_mass_spec(params, std::move(name))), params_(params) {}

EnvState PointMass::reset(Rng& rng) const {
  const double w = params_.reset_half_width;
  Vector x = Vector::Zero(6);
  for (int i : {0, 1, 4, 5}) x[i] = uniform(rng, -w, w);
  return {x, 0};
}

std::pair<Vector, double> PointMass::integrate(const Vector& state, const Eigen::Vector2d& accel) const {
  const double dt = params_.dt;
  Eigen::Vector2d vel = (state.segment<2>(2) + dt * accel).cwiseMax(-params_.speed_limit).cwiseMin(params_.speed_limit);
  Eigen::Vector2d pos = state.head<2>() + dt * vel;
  Vector next(6);
  next << pos, vel, state.segment<2>(4);
  double reward = -(pos - state.segment<2>(4)).norm();
  return {next, reward};
}

std::pair<Vector, double> PointMass::transition(const Vector& state, const Vector& action) const {
  return integrate(state, action.head<2>());
}

Vector PointMass::expert_action(const Vector& state) const {
  Eigen::Vector2d a = params_.kp * (state.segment<2>(4) - state.head<2>()) - params_.kd * state.segment<2>(2);
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

std::optional<Eigen::Vector2d> PointMass::shared_coords(const Vector& state) const {
  return Eigen::Vector2d(state.head<2>());
}

namespace {

DomainSpec lifted_spec(const PointMass& base, const Matrix& m, const Vector& bound) {
  DomainSpec s = base.spec();
  s.name = "lifted_point_mass";
  s.state_dim = static_cast<int>(m.rows());
  s.action_dim = static_cast<int>(bound.size());
  s.action_lo = -bound;
  s.action_hi = bound;
  return s;
}

}  // namespace

LiftedPointMass::LiftedPointMass(PointMass base, Matrix state_lift, Matrix action_lift, Vector action_bound)
    : Env(lifted_spec(base, state_lift, action_bound)),
      base_(std::move(base)),
      state_lift_(std::move(state_lift)),
      action_lift_(std::move(action_lift)) {
  if (state_lift_.cols() != 6 || action_lift_.cols() != 2 || action_lift_.rows() != action_bound.size()) {
    throw ConfigError("LiftedPointMass: lift shapes do not match the point mass");
  }
  Eigen::FullPivLU<Matrix> lu_m(state_lift_), lu_n(action_lift_);
  if (lu_m.rank() != 6 || lu_n.rank() != 2) throw ConfigError("LiftedPointMass: lifts must have full column rank");
  state_lift_pinv_ = pseudo_inverse(state_lift_);
  action_lift_pinv_ = pseudo_inverse(action_lift_);
}

EnvState LiftedPointMass::reset(Rng& rng) const {
  EnvState s = base_.reset(rng);
  return {state_lift_ * s.x, 0};
}

std::pair<Vector, double> LiftedPointMass::transition(const Vector& state, const Vector& action) const {
  Vector x = state_lift_pinv_ * state;
  Eigen::Vector2d accel = (action_lift_pinv_ * action).cwiseMax(-1.0).cwiseMin(1.0);
  auto [next, reward] = base_.integrate(x, accel);
  return {state_lift_ * next, reward};
}

Vector LiftedPointMass::expert_action(const Vector& state) const {
  Vector x = state_lift_pinv_ * state;
  return clip_action(action_lift_ * base_.expert_action(x));
}

std::optional<Eigen::Vector2d> LiftedPointMass::shared_coords(const Vector& state) const {
  return Eigen::Vector2d(state.head<2>());
}

}  // namespace ecc::envs
