#pragma once

#include "ecc/envs/env.hpp"

namespace ecc::envs {

struct PointMassParams {
  double dt = 0.05;
  double speed_limit = 1.0;
  double reset_half_width = 1.0;  // pos and goal uniform in [-w, w]^2
  double kp = 4.0;
  double kd = 2.0;
  int horizon = 200;
};

// 2-D point mass. State [pos(2), vel(2), goal(2)], action = acceleration in [-1, 1]^2.
//   vel' = clip(vel + dt * a, +-speed_limit)
//   pos' = pos + dt * vel'
//   reward = -|pos' - goal|_2
class PointMass : public Env {
 public:
  explicit PointMass(PointMassParams params = {}, std::string name = "point_mass");

  EnvState reset(Rng& rng) const override;
  Vector expert_action(const Vector& state) const override;
  std::optional<Eigen::Vector2d> shared_coords(const Vector& state) const override;

  const PointMassParams& params() const { return params_; }
  // Dynamics on an explicit acceleration (already within bounds).
  std::pair<Vector, double> integrate(const Vector& state, const Eigen::Vector2d& accel) const;

 protected:
  std::pair<Vector, double> transition(const Vector& state, const Vector& action) const override;

 private:
  PointMassParams params_;
};

// Point mass observed through a linear lift y = M x (M: 8x6, full column rank,
// first two rows select pos) and actuated by u in R^3 whose effective
// acceleration is clip(N^+ u, +-1) for a fixed 3x2 lift N.
class LiftedPointMass : public Env {
 public:
  LiftedPointMass(PointMass base, Matrix state_lift, Matrix action_lift, Vector action_bound);

  EnvState reset(Rng& rng) const override;
  // Native controller: decode the point-mass state, run its PD law, lift the action.
  Vector expert_action(const Vector& state) const override;
  std::optional<Eigen::Vector2d> shared_coords(const Vector& state) const override;

  const Matrix& state_lift() const { return state_lift_; }
  const Matrix& state_lift_pinv() const { return state_lift_pinv_; }
  const Matrix& action_lift() const { return action_lift_; }
  const Matrix& action_lift_pinv() const { return action_lift_pinv_; }
  const PointMass& base() const { return base_; }

 protected:
  std::pair<Vector, double> transition(const Vector& state, const Vector& action) const override;

 private:
  PointMass base_;
  Matrix state_lift_;
  Matrix state_lift_pinv_;
  Matrix action_lift_;
  Matrix action_lift_pinv_;
};

Matrix pseudo_inverse(const Matrix& m);

}  // namespace ecc::envs
