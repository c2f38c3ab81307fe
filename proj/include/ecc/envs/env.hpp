#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "ecc/rng.hpp"

namespace ecc::envs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct DomainSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Vector action_lo;
  Vector action_hi;
  int horizon = 200;
  double dt = 0.05;
  double discount = 0.99;  // carried for completeness; training does not use it

  void validate() const;
};

struct EnvState {
  Vector x;
  int step = 0;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
  bool clipped = false;  // action was outside the bounds and got clipped
};

// Immutable episodic MDP. All methods are pure functions of their arguments,
// so one instance can be shared between threads.
class Env {
 public:
  explicit Env(DomainSpec spec);
  virtual ~Env() = default;

  const DomainSpec& spec() const { return spec_; }
  int state_dim() const { return spec_.state_dim; }
  int action_dim() const { return spec_.action_dim; }

  virtual EnvState reset(Rng& rng) const = 0;
  // Non-finite actions throw UsageError; out-of-bounds actions are clipped.
  StepResult step(const EnvState& state, const Vector& action) const;
  // Scripted near-optimal controller in this domain.
  virtual Vector expert_action(const Vector& state) const = 0;
  // 2-D coordinates that a correct state translation should preserve.
  virtual std::optional<Eigen::Vector2d> shared_coords(const Vector& state) const = 0;

  Vector clip_action(const Vector& action) const;
  Vector uniform_action(Rng& rng) const;

 protected:
  // Next state and reward for an in-bounds action.
  virtual std::pair<Vector, double> transition(const Vector& state, const Vector& action) const = 0;

 private:
  DomainSpec spec_;
};

}  // namespace ecc::envs
