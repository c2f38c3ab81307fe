#pragma once

#include <vector>

#include "ecc/envs/env.hpp"

namespace ecc::envs {

struct ReacherParams {
  std::vector<double> links{0.5, 0.5};
  double dt = 0.05;
  double damping = 2.0;     // joint velocity damping, 1/s
  double torque_gain = 4.0; // joint acceleration per unit torque
  double speed_limit = 3.0; // rad/s
  double kp = 3.0;          // Jacobian-transpose gain
  double kd = 0.6;
  bool goal_distance_feature = false;
  int horizon = 200;
};

// Planar n-link arm with torque-limited damped joints and unit inertia.
// State [q(n), qd(n), goal(2), tip(2)] plus an optional |tip - goal| entry,
// action = joint torques in [-1, 1]^n.
//   qd' = clip((1 - damping*dt) qd + dt * torque_gain * tau, +-speed_limit)
//   q'  = q + dt * qd'
//   reward = -|tip(q') - goal|_2
class Reacher : public Env {
 public:
  explicit Reacher(ReacherParams params, std::string name);

  EnvState reset(Rng& rng) const override;
  // tau = clip(kp * J^T (goal - tip) - kd * qd)
  Vector expert_action(const Vector& state) const override;
  std::optional<Eigen::Vector2d> shared_coords(const Vector& state) const override;

  int links() const { return static_cast<int>(params_.links.size()); }
  Eigen::Vector2d fingertip(const Vector& q) const;
  Matrix jacobian(const Vector& q) const;  // 2 x n

 protected:
  std::pair<Vector, double> transition(const Vector& state, const Vector& action) const override;

 private:
  Vector make_state(const Vector& q, const Vector& qd, const Eigen::Vector2d& goal) const;

  ReacherParams params_;
};

}  // namespace ecc::envs
