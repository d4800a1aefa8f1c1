#ifndef SOIL_DEMOS_HPP_
#define SOIL_DEMOS_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "soil/env.hpp"

namespace soil {

// One episode: T+1 observations, optionally T actions and T rewards.
// Length invariants are enforced at construction and after load.
struct Trajectory {
  Eigen::MatrixXd states;                 // (T+1) x obs_dim, rows are steps
  std::optional<Eigen::MatrixXd> actions;  // T x act_dim
  std::optional<Eigen::VectorXd> rewards;  // T

  int steps() const { return static_cast<int>(states.rows()) - 1; }
  void validate() const;
};

struct DemoSet {
  std::vector<Trajectory> trajectories;
  std::string env_fingerprint;
  bool state_only = false;
  int obs_dim = 0;
  int act_dim = 0;
  // Version of the inverse model that produced the actions, when relabeled.
  // Runtime bookkeeping only, never serialized.
  std::uint64_t relabel_version = 0;

  void validate() const;
  int total_pairs() const;  // sum of per-trajectory step counts
  // All non-terminal states (for soil/dapg pairs) or all states including
  // terminal (for state matching), stacked row-wise.
  Eigen::MatrixXd stacked_states(bool include_terminal) const;
};

// Proportional-derivative controller driving the effector to the object,
// grasping, then driving to the goal. Deterministic.
Eigen::VectorXd scripted_expert_action(const EnvSpec& spec, const EnvState& state);

// n successful expert rollouts with actions and rewards. Failed episodes are
// resampled up to 10*n attempts, then this throws. `attempts_out`, when given,
// receives the number of episodes tried.
DemoSet generate_demos(const EnvSpec& spec, int n, std::uint64_t seed,
                       int* attempts_out = nullptr);

DemoSet strip_actions(const DemoSet& demos);

// JSON Lines: header line {version, env_fingerprint, obs_dim, act_dim,
// state_only}, then one trajectory object per line. Floats serialize as
// shortest round-trip decimals, so save/load round trips are exact.
void save_demos(const DemoSet& demos, const std::string& path);
DemoSet load_demos(const std::string& path);

}  // namespace soil

#endif  // SOIL_DEMOS_HPP_
