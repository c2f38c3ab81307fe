#include "ecc/envs/env.hpp"

#include "ecc/error.hpp"

namespace ecc::envs {

void DomainSpec::validate() const {
  if (state_dim < 1 || action_dim < 1) throw ConfigError("domain '" + name + "': dimensions must be >= 1");
  if (action_lo.size() != action_dim || action_hi.size() != action_dim) {
    throw ConfigError("domain '" + name + "': action bounds do not match action_dim");
  }
  for (int i = 0; i < action_dim; ++i) {
    if (!(action_lo[i] < action_hi[i])) throw ConfigError("domain '" + name + "': empty action interval");
  }
  if (horizon < 1) throw ConfigError("domain '" + name + "': horizon must be >= 1");
  if (!(dt > 0)) throw ConfigError("domain '" + name + "': dt must be positive");
}

Env::Env(DomainSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Vector Env::clip_action(const Vector& action) const {
  return action.cwiseMax(spec_.action_lo).cwiseMin(spec_.action_hi);
}

Vector Env::uniform_action(Rng& rng) const {
  Vector a(spec_.action_dim);
  for (int i = 0; i < spec_.action_dim; ++i) {
    std::uniform_real_distribution<double> dist(spec_.action_lo[i], spec_.action_hi[i]);
    a[i] = dist(rng);
  }
  return a;
}

StepResult Env::step(const EnvState& state, const Vector& action) const {
  if (state.x.size() != spec_.state_dim) {
    throw UsageError(spec_.name + ": state has length " + std::to_string(state.x.size()) + ", expected " +
                     std::to_string(spec_.state_dim));
  }
  if (action.size() != spec_.action_dim) {
    throw UsageError(spec_.name + ": action has length " + std::to_string(action.size()) + ", expected " +
                     std::to_string(spec_.action_dim));
  }
  if (!action.allFinite()) throw UsageError(spec_.name + ": non-finite action");
  if (state.step >= spec_.horizon) throw UsageError(spec_.name + ": step called on a finished episode");
  Vector a = clip_action(action);
  StepResult r;
  r.clipped = (a.array() != action.array()).any();
  auto [next, reward] = transition(state.x, a);
  r.next = EnvState{std::move(next), state.step + 1};
  r.reward = reward;
  r.done = r.next.step >= spec_.horizon;
  return r;
}

}  // namespace ecc::envs
