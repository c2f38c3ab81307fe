#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecc/envs/env.hpp"

namespace ecc::envs {

// Exact linear correspondence between two domains:
//   F*(x) = M x,  G*(y) = M^+ y,  H*(x, a) = N a,  P*(y, u) = N^+ u.
struct GroundTruth {
  Matrix state_lift;        // M
  Matrix state_lift_pinv;   // M^+
  Matrix action_lift;       // N
  Matrix action_lift_pinv;  // N^+

  Vector F(const Vector& x) const { return state_lift * x; }
  Vector G(const Vector& y) const { return state_lift_pinv * y; }
  Vector H(const Vector& /*x*/, const Vector& a) const { return action_lift * a; }
  Vector P(const Vector& /*y*/, const Vector& u) const { return action_lift_pinv * u; }
};

struct DomainPair {
  std::string name;
  std::shared_ptr<const Env> source;
  std::shared_ptr<const Env> target;
  std::optional<GroundTruth> truth;

  bool has_shared_coords() const;
};

const std::vector<std::string>& domain_pair_names();
// Known names: identity, linear_lift, reacher23. Unknown names throw UsageError.
// The constants of every pair are fixed; `seed` is accepted for interface
// symmetry and does not change the construction.
DomainPair make_domain_pair(std::string_view name, std::uint64_t seed = 0);

// The 8x6 state lift and 3x2 action lift of linear_lift.
Matrix linear_lift_state_matrix();
Matrix linear_lift_action_matrix();
Vector linear_lift_action_bound();

}  // namespace ecc::envs
