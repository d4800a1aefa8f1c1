#ifndef SOIL_ENV_HPP_
#define SOIL_ENV_HPP_

#include <Eigen/Core>
#include <string>

#include "soil/rng.hpp"

namespace soil {

// Deterministic desk-scale relocation environments. All physics constants are
// compiled in and documented in the README constants table; stochasticity
// enters only through reset sampling and policy noise.
namespace env_const {
// point agent
inline constexpr double kForceScale = 2.0;   // N per unit action
inline constexpr double kPointMass = 1.0;    // kg
// arm agent
inline constexpr double kTorqueScale = 2.0;  // N*m per unit action
inline constexpr double kJointInertia = 1.0;
inline constexpr double kJointDamping = 1.0;
inline constexpr double kLinkLength = 0.35;  // m
inline constexpr int kMaxLinks = 3;
// grasping
inline constexpr double kGraspRadiusBall = 0.10;
inline constexpr double kGraspRadiusBox = 0.07;
inline constexpr double kGraspRadiusSlippery = 0.10;
inline constexpr double kSlipSpeed = 0.6;    // m/s, slippery detach threshold
// reward
inline constexpr double kCarryBonus = 1.0;
inline constexpr double kSuccessBonus = 10.0;
inline constexpr double kSuccessRadius = 0.05;
// reset sampling boxes for object and goal
inline constexpr double kPointBoxLo[2] = {-0.6, -0.6};
inline constexpr double kPointBoxHi[2] = {0.6, 0.6};
inline constexpr double kArmBoxLo[2] = {-0.6, 0.2};
inline constexpr double kArmBoxHi[2] = {0.6, 0.8};
}  // namespace env_const

enum class EnvKind { kPointRelocate, kArmRelocate };
enum class ObjectKind { kBall, kBox, kSlippery };

std::string to_string(EnvKind kind);
std::string to_string(ObjectKind kind);
EnvKind env_kind_from_string(const std::string& s);
ObjectKind object_kind_from_string(const std::string& s);

struct EnvSpec {
  EnvKind kind = EnvKind::kPointRelocate;
  double mass_multiplier = 1.0;
  int n_links = 3;  // arm only
  ObjectKind object_kind = ObjectKind::kBall;
  int horizon = 100;
  double dt = 0.05;

  bool operator==(const EnvSpec&) const = default;

  void validate() const;
  int obs_dim() const;     // constant across mass/object/link variants of a kind
  int action_dim() const;  // point: 3; arm: n_links + 1
  double grasp_radius() const;
  std::string fingerprint() const;  // hash of the canonical spec JSON
  std::string to_json() const;
  static EnvSpec from_json(const std::string& text);
};

// variant(): copies of the spec differing in exactly one field
EnvSpec with_mass(const EnvSpec& spec, double mass_multiplier);
EnvSpec with_links(const EnvSpec& spec, int n_links);
EnvSpec with_object(const EnvSpec& spec, ObjectKind object_kind);

struct EnvState {
  // point agent
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  // arm agent (sized n_links)
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  // shared
  Eigen::Vector2d obj = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  bool attached = false;
  int t = 0;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

// Agent at rest at the origin configuration; object and goal uniform in the
// documented box.
EnvState env_reset(const EnvSpec& spec, RngStream& episode_rng);

// Pure function of (spec, state, action); semi-implicit Euler, see README.
StepResult env_step(const EnvSpec& spec, const EnvState& state,
                    const Eigen::Ref<const Eigen::VectorXd>& action);

// Flat observation [agent kinematics (zero-padded for removed links), obj,
// goal, attached 0/1]. Same layout as the demonstration state space.
Eigen::VectorXd observe(const EnvSpec& spec, const EnvState& state);
EnvState state_from_obs(const EnvSpec& spec,
                        const Eigen::Ref<const Eigen::VectorXd>& obs);

Eigen::Vector2d effector_position(const EnvSpec& spec, const EnvState& state);
double effector_speed(const EnvSpec& spec, const EnvState& state);

inline bool is_success(const EnvState& state) {
  return (state.obj - state.goal).norm() < env_const::kSuccessRadius;
}

}  // namespace soil

#endif  // SOIL_ENV_HPP_
