#include "ecc/envs/domain_pair.hpp"

#include "ecc/envs/point_mass.hpp"
#include "ecc/envs/reacher.hpp"
#include "ecc/error.hpp"

namespace ecc::envs {

bool DomainPair::has_shared_coords() const {
  Vector xs = Vector::Zero(source->state_dim());
  Vector ys = Vector::Zero(target->state_dim());
  return source->shared_coords(xs).has_value() && target->shared_coords(ys).has_value();
}

const std::vector<std::string>& domain_pair_names() {
  static const std::vector<std::string> names{"identity", "linear_lift", "reacher23"};
  return names;
}

Matrix linear_lift_state_matrix() {
  // Rows 0-1 select pos; rows 2-7 were drawn once from U(-1, 1) (numpy
  // default_rng(20231)), rounded to 4 decimals. Singular values 1.98 .. 0.49.
  Matrix m(8, 6);
  m << 1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
       0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
       0.3452, -0.5994, 0.359, 0.1905, -0.9729, 0.8128,
       -0.5991, 0.5682, -0.2089, -0.6978, -0.2013, 0.2144,
       0.6571, -0.4395, -0.5558, -0.7948, 0.0556, -0.7605,
       -0.8302, -0.4525, -0.4379, -0.8069, 0.1349, 0.0782,
       -0.6469, -0.7797, 0.7633, 0.0799, 0.4752, 0.1099,
       -0.5782, 0.0344, 0.6138, 0.235, -0.8352, -0.1517;
  return m;
}

Matrix linear_lift_action_matrix() {
  // u1 = 1.25 a2, u2 = -0.8 a1, u3 carries no effect. A scaled signed
  // permutation keeps uniform target actions equivalent to uniform source
  // accelerations, and the idle third actuator keeps the inverse-dynamics
  // median on H*.
  Matrix n(3, 2);
  n << 0.0, 1.25,
       -0.8, 0.0,
       0.0, 0.0;
  return n;
}

Vector linear_lift_action_bound() {
  Vector b(3);
  b << 1.25, 0.8, 1.0;
  return b;
}

DomainPair make_domain_pair(std::string_view name, std::uint64_t /*seed*/) {
  DomainPair pair;
  pair.name = std::string(name);
  if (name == "identity") {
    pair.source = std::make_shared<PointMass>(PointMassParams{}, "point_mass");
    pair.target = std::make_shared<PointMass>(PointMassParams{}, "point_mass");
    pair.truth = GroundTruth{Matrix::Identity(6, 6), Matrix::Identity(6, 6), Matrix::Identity(2, 2),
                             Matrix::Identity(2, 2)};
  } else if (name == "linear_lift") {
    PointMass base(PointMassParams{}, "point_mass");
    auto target = std::make_shared<LiftedPointMass>(base, linear_lift_state_matrix(), linear_lift_action_matrix(),
                                                    linear_lift_action_bound());
    pair.source = std::make_shared<PointMass>(base);
    pair.truth = GroundTruth{target->state_lift(), target->state_lift_pinv(), target->action_lift(),
                             target->action_lift_pinv()};
    pair.target = std::move(target);
  } else if (name == "reacher23") {
    ReacherParams src;
    src.links = {0.5, 0.5};
    ReacherParams tgt;
    tgt.links = {0.4, 0.3, 0.3};
    tgt.goal_distance_feature = true;
    pair.source = std::make_shared<Reacher>(src, "reacher2");
    pair.target = std::make_shared<Reacher>(tgt, "reacher3");
  } else {
    throw UsageError("unknown domain pair '" + std::string(name) + "' (known: identity, linear_lift, reacher23)");
  }
  return pair;
}

}  // namespace ecc::envs
