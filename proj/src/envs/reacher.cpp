#include "ecc/envs/reacher.hpp"

#include <cmath>
#include <numbers>

#include "ecc/error.hpp"

namespace ecc::envs {

namespace {

DomainSpec reacher_spec(const ReacherParams& p, std::string name) {
  if (p.links.empty()) throw ConfigError("Reacher needs at least one link");
  int n = static_cast<int>(p.links.size());
  DomainSpec s;
  s.name = std::move(name);
  s.state_dim = 2 * n + 4 + (p.goal_distance_feature ? 1 : 0);
  s.action_dim = n;
  s.action_lo = Vector::Constant(n, -1.0);
  s.action_hi = Vector::Constant(n, 1.0);
  s.horizon = p.horizon;
  s.dt = p.dt;
  return s;
}

}  // namespace

Reacher::Reacher(ReacherParams params, std::string name)
    : Env(reacher_spec(params, std::move(name))), params_(std::move(params)) {}

Eigen::Vector2d Reacher::fingertip(const Vector& q) const {
  Eigen::Vector2d tip = Eigen::Vector2d::Zero();
  double angle = 0.0;
  for (int i = 0; i < links(); ++i) {
    angle += q[i];
    tip += params_.links[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  return tip;
}

Matrix Reacher::jacobian(const Vector& q) const {
  int n = links();
  std::vector<double> cum(n);
  double angle = 0.0;
  for (int i = 0; i < n; ++i) cum[i] = angle += q[i];
  Matrix j = Matrix::Zero(2, n);
  // Joint i moves every link k >= i.
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      j(0, i) -= params_.links[k] * std::sin(cum[k]);
      j(1, i) += params_.links[k] * std::cos(cum[k]);
    }
  }
  return j;
}

Vector Reacher::make_state(const Vector& q, const Vector& qd, const Eigen::Vector2d& goal) const {
  int n = links();
  Vector x(state_dim());
  Eigen::Vector2d tip = fingertip(q);
  x.head(n) = q;
  x.segment(n, n) = qd;
  x.segment<2>(2 * n) = goal;
  x.segment<2>(2 * n + 2) = tip;
  if (params_.goal_distance_feature) x[2 * n + 4] = (tip - goal).norm();
  return x;
}

EnvState Reacher::reset(Rng& rng) const {
  int n = links();
  std::uniform_real_distribution<double> joint(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  Vector q(n), q_goal(n);
  for (int i = 0; i < n; ++i) q[i] = joint(rng);
  for (int i = 0; i < n; ++i) q_goal[i] = joint(rng);
  return {make_state(q, Vector::Zero(n), fingertip(q_goal)), 0};
}

std::pair<Vector, double> Reacher::transition(const Vector& state, const Vector& action) const {
  int n = links();
  const double dt = params_.dt;
  Vector qd = (1.0 - params_.damping * dt) * state.segment(n, n) + dt * params_.torque_gain * action;
  qd = qd.cwiseMax(-params_.speed_limit).cwiseMin(params_.speed_limit);
  Vector q = state.head(n) + dt * qd;
  Eigen::Vector2d goal = state.segment<2>(2 * n);
  Vector next = make_state(q, qd, goal);
  return {next, -(next.segment<2>(2 * n + 2) - goal).norm()};
}

Vector Reacher::expert_action(const Vector& state) const {
  int n = links();
  Vector q = state.head(n);
  Eigen::Vector2d err = state.segment<2>(2 * n) - fingertip(q);
  Vector tau = params_.kp * jacobian(q).transpose() * err - params_.kd * state.segment(n, n);
  return clip_action(tau);
}

std::optional<Eigen::Vector2d> Reacher::shared_coords(const Vector& state) const {
  return Eigen::Vector2d(state.segment<2>(2 * links() + 2));
}

}  // namespace ecc::envs
