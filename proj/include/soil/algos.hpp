#ifndef SOIL_ALGOS_HPP_
#define SOIL_ALGOS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "soil/inverse.hpp"
#include "soil/npg.hpp"

namespace soil {

enum class Algorithm { kSoil, kDapg, kNpg, kChamfer, kDensity };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

// Geometric imitation weight lambda0 * lambda1^k, annealed by lambda1 < 1.
struct ImitationSchedule {
  double lambda0 = 0.1;
  double lambda1 = 0.99;

  double weight(int k) const;
  void validate() const;
};

struct AlgoConfig {
  Algorithm algorithm = Algorithm::kSoil;
  int n_iter = 200;
  int n_traj = 20;
  int n_inv = 5;
  int inv_batch = 64;
  ImitationSchedule schedule;
  NpgConfig npg;
  double gamma = 0.995;
  double gae_lambda = 0.97;
  int buffer_capacity = 50000;
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> value_hidden{64, 64};
  std::vector<int> inverse_hidden{64, 64};
  int baseline_epochs = 10;
  int baseline_batch = 64;
  double baseline_lr = 1e-3;
  double inverse_lr = 1e-3;
  double disc_lr = 1e-3;
  double w_match = 0.1;     // reward-shaping weight for the matching baselines
  int ensemble_k = 1;       // >1 trains an inverse-model ensemble
  int relabel_warmup = 0;   // iterations before the imitation term kicks in
  std::uint64_t seed = 0;
  bool record_params = false;  // keep per-iteration parameter snapshots

  void validate() const;
};

// One row of the learning curve. wall_ms is kept out of the deterministic
// metrics so byte-identical reruns stay byte-identical.
struct IterationMetrics {
  int iter = 0;
  double env_return_mean = 0.0;
  double env_return_std = 0.0;
  double shaped_return_mean = 0.0;
  double success_rate = 0.0;
  double inv_loss = std::numeric_limits<double>::quiet_NaN();
  double imitation_weight = 0.0;
  double realized_kl = 0.0;
  double wall_ms = 0.0;
  // npg internals, logged to the diagnostics sidecar
  double surrogate = 0.0;
  double grad_norm = 0.0;
  double step_scale = 0.0;
};

struct TrainResult {
  GaussianPolicy policy;
  ValueBaseline baseline;
  std::vector<IterationMetrics> curve;
  std::vector<InverseModel> inverse;      // soil only
  std::vector<ParamVector> param_trace;   // when record_params
};

struct EvalSummary {
  double mean_return = 0.0;
  double std_return = 0.0;
  double success_rate = 0.0;
  int episodes = 0;
};

// Stochastic rollouts for training. Reset and action-noise streams are
// derived per (iteration, trajectory), so results are independent of any
// parallel collection order.
struct RolloutSet {
  std::vector<Trajectory> trajectories;
  Eigen::VectorXd env_returns;
  std::vector<bool> successes;
};
RolloutSet collect_rollouts(const GaussianPolicy& policy, const EnvSpec& spec,
                            int n_traj, std::uint64_t seed, int iter);

// Mean-action evaluation, no sampling noise.
EvalSummary evaluate_policy(const GaussianPolicy& policy, const EnvSpec& spec,
                            int episodes, std::uint64_t seed);

// Auxiliary imitation gradient at iteration k:
// weight(k) * (1/|pairs|) * sum grad log pi(a|s) over all demo pairs.
ParamVector imitation_gradient(const GaussianPolicy& policy, const DemoSet& demos,
                               const ImitationSchedule& schedule, int k);

// State-only imitation learning: joint policy / inverse-model training with
// demonstration relabeling each iteration.
TrainResult soil_train(const AlgoConfig& cfg, const EnvSpec& spec,
                       const DemoSet& state_only_demos);

// Demo-augmented policy gradient on ground-truth state-action demos.
TrainResult dapg_train(const AlgoConfig& cfg, const EnvSpec& spec,
                       const DemoSet& demos_with_actions);

// Pure RL.
TrainResult npg_train(const AlgoConfig& cfg, const EnvSpec& spec);

// State-matching and density-estimation baselines (state-only demos;
// matching signal enters as reward shaping with weight w_match).
TrainResult chamfer_train(const AlgoConfig& cfg, const EnvSpec& spec,
                          const DemoSet& state_only_demos);
TrainResult density_train(const AlgoConfig& cfg, const EnvSpec& spec,
                          const DemoSet& state_only_demos);

TrainResult train(const AlgoConfig& cfg, const EnvSpec& spec,
                  const DemoSet* demos);

// Per-state bonus -min_d ||s - s_d||^2 against the demo state set.
Eigen::VectorXd chamfer_bonus(const Eigen::Ref<const Eigen::MatrixXd>& states,
                              const Eigen::Ref<const Eigen::MatrixXd>& demo_states);

// Symmetric Chamfer distance: mean forward + mean backward nearest-neighbor
// squared distance. Diagnostic companion of chamfer_bonus.
double chamfer_distance(const Eigen::Ref<const Eigen::MatrixXd>& a,
                        const Eigen::Ref<const Eigen::MatrixXd>& b);

// Logistic discriminator over observations (demo = 1, policy = 0).
struct Discriminator {
  MlpSpec spec;  // obs_dim -> 1 logit
  ParamVector params;
  AdamState adam;

  Discriminator(int obs_dim, std::vector<int> hidden);
  void init(RngStream& rng) { params = mlp_init_params(spec, rng); }
  Eigen::VectorXd logits(const Eigen::Ref<const Eigen::MatrixXd>& S) const {
    return mlp_forward_batch(spec, params, S);
  }
};

// log sigma(z) - log(1 - sigma(z)) reduces to the logit itself.
Eigen::VectorXd density_bonus(const Discriminator& disc,
                              const Eigen::Ref<const Eigen::MatrixXd>& states);

// One epoch of logistic classification; returns the mean pre-step loss.
double density_update(Discriminator& disc,
                      const Eigen::Ref<const Eigen::MatrixXd>& policy_states,
                      const Eigen::Ref<const Eigen::MatrixXd>& demo_states,
                      double lr, RngStream& shuffle_rng);

// Mean binary cross-entropy of the discriminator on labeled states.
double density_loss(const Discriminator& disc,
                    const Eigen::Ref<const Eigen::MatrixXd>& states,
                    const Eigen::Ref<const Eigen::VectorXd>& labels);

}  // namespace soil

#endif  // SOIL_ALGOS_HPP_
