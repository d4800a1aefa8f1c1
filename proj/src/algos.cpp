#include "soil/algos.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace soil {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kSoil: return "soil";
    case Algorithm::kDapg: return "dapg";
    case Algorithm::kNpg: return "npg";
    case Algorithm::kChamfer: return "chamfer";
    case Algorithm::kDensity: return "density";
  }
  return "soil";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "soil") return Algorithm::kSoil;
  if (s == "dapg") return Algorithm::kDapg;
  if (s == "npg") return Algorithm::kNpg;
  if (s == "chamfer") return Algorithm::kChamfer;
  if (s == "density") return Algorithm::kDensity;
  throw std::invalid_argument("unknown algorithm: " + s);
}

double ImitationSchedule::weight(int k) const {
  if (k < 0) throw std::invalid_argument("ImitationSchedule: k must be >= 0");
  return lambda0 * std::pow(lambda1, static_cast<double>(k));
}

void ImitationSchedule::validate() const {
  if (lambda0 < 0.0)
    throw std::invalid_argument("ImitationSchedule: lambda0 must be >= 0");
  if (lambda1 <= 0.0 || lambda1 > 1.0)
    throw std::invalid_argument("ImitationSchedule: lambda1 must be in (0,1]");
}

void AlgoConfig::validate() const {
  if (n_iter < 0) throw std::invalid_argument("AlgoConfig: n_iter must be >= 0");
  if (n_traj < 1) throw std::invalid_argument("AlgoConfig: n_traj must be >= 1");
  if (n_inv < 0) throw std::invalid_argument("AlgoConfig: n_inv must be >= 0");
  if (inv_batch < 1)
    throw std::invalid_argument("AlgoConfig: inv_batch must be >= 1");
  if (buffer_capacity < 1)
    throw std::invalid_argument("AlgoConfig: buffer_capacity must be >= 1");
  if (ensemble_k < 1)
    throw std::invalid_argument("AlgoConfig: ensemble_k must be >= 1");
  if (relabel_warmup < 0)
    throw std::invalid_argument("AlgoConfig: relabel_warmup must be >= 0");
  if (w_match < 0.0)
    throw std::invalid_argument("AlgoConfig: w_match must be >= 0");
  schedule.validate();
}

RolloutSet collect_rollouts(const GaussianPolicy& policy, const EnvSpec& spec,
                            int n_traj, std::uint64_t seed, int iter) {
  RolloutSet out;
  out.trajectories.resize(n_traj);
  out.env_returns.resize(n_traj);
  out.successes.assign(n_traj, false);

  for (int j = 0; j < n_traj; ++j) {
    RngStream reset_rng(seed, StreamPurpose::kEnvReset,
                        static_cast<std::uint64_t>(iter),
                        static_cast<std::uint64_t>(j));
    RngStream noise_rng(seed, StreamPurpose::kRolloutNoise,
                        static_cast<std::uint64_t>(iter),
                        static_cast<std::uint64_t>(j));
    EnvState state = env_reset(spec, reset_rng);

    Trajectory traj;
    traj.states.resize(spec.horizon + 1, spec.obs_dim());
    traj.actions.emplace(spec.horizon, spec.action_dim());
    traj.rewards.emplace(spec.horizon);
    traj.states.row(0) = observe(spec, state);

    double ret = 0.0;
    bool success = false;
    for (int t = 0; t < spec.horizon; ++t) {
      const Eigen::VectorXd action =
          policy.sample_action(traj.states.row(t), noise_rng);
      StepResult step = env_step(spec, state, action);
      traj.actions->row(t) = action;
      (*traj.rewards)[t] = step.reward;
      traj.states.row(t + 1) = observe(spec, step.state);
      ret += step.reward;
      state = step.state;
      success = success || is_success(state);
    }
    out.env_returns[j] = ret;
    out.successes[j] = success;
    out.trajectories[j] = std::move(traj);
  }
  return out;
}

EvalSummary evaluate_policy(const GaussianPolicy& policy, const EnvSpec& spec,
                            int episodes, std::uint64_t seed) {
  if (episodes < 1)
    throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
  EvalSummary summary;
  summary.episodes = episodes;
  Eigen::VectorXd returns(episodes);
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    RngStream reset_rng(seed, StreamPurpose::kEval,
                        static_cast<std::uint64_t>(ep));
    EnvState state = env_reset(spec, reset_rng);
    double ret = 0.0;
    bool success = false;
    for (int t = 0; t < spec.horizon; ++t) {
      const Eigen::VectorXd action = policy.mean_action(observe(spec, state));
      StepResult step = env_step(spec, state, action);
      ret += step.reward;
      state = step.state;
      success = success || is_success(state);
    }
    returns[ep] = ret;
    if (success) ++successes;
  }
  summary.mean_return = returns.mean();
  summary.std_return =
      episodes > 1 ? std::sqrt((returns.array() - summary.mean_return)
                                   .square()
                                   .sum() /
                               (episodes - 1))
                   : 0.0;
  summary.success_rate = static_cast<double>(successes) / episodes;
  return summary;
}

ParamVector imitation_gradient(const GaussianPolicy& policy, const DemoSet& demos,
                               const ImitationSchedule& schedule, int k) {
  if (demos.state_only)
    throw std::invalid_argument("imitation_gradient: demos carry no actions");
  const double w = schedule.weight(k);
  const int pairs = demos.total_pairs();
  if (w == 0.0 || pairs == 0)
    return ParamVector::Zero(policy.param_count());

  Eigen::MatrixXd S(pairs, demos.obs_dim);
  Eigen::MatrixXd A(pairs, demos.act_dim);
  int at = 0;
  for (const auto& traj : demos.trajectories) {
    const int T = traj.steps();
    S.middleRows(at, T) = traj.states.topRows(T);
    A.middleRows(at, T) = *traj.actions;
    at += T;
  }
  const Eigen::VectorXd weights =
      Eigen::VectorXd::Constant(pairs, w / static_cast<double>(pairs));
  return policy.weighted_score_sum(S, A, weights);
}

Eigen::VectorXd chamfer_bonus(const Eigen::Ref<const Eigen::MatrixXd>& states,
                              const Eigen::Ref<const Eigen::MatrixXd>& demo_states) {
  if (demo_states.rows() == 0)
    throw std::invalid_argument("chamfer_bonus: empty demo states");
  if (states.cols() != demo_states.cols())
    throw std::invalid_argument("chamfer_bonus: dimension mismatch");
  Eigen::VectorXd bonus(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < demo_states.rows(); ++j) {
      const double d = (states.row(i) - demo_states.row(j)).squaredNorm();
      if (d < best) best = d;
    }
    bonus[i] = -best;
  }
  return bonus;
}

double chamfer_distance(const Eigen::Ref<const Eigen::MatrixXd>& a,
                        const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() == 0 || b.rows() == 0)
    throw std::invalid_argument("chamfer_distance: empty point set");
  return -chamfer_bonus(a, b).mean() - chamfer_bonus(b, a).mean();
}

Discriminator::Discriminator(int obs_dim, std::vector<int> hidden) {
  spec.input_dim = obs_dim;
  spec.hidden = std::move(hidden);
  spec.output_dim = 1;
  spec.validate();
  params = ParamVector::Zero(spec.param_count());
}

Eigen::VectorXd density_bonus(const Discriminator& disc,
                              const Eigen::Ref<const Eigen::MatrixXd>& states) {
  // log sigma(z) - log(1 - sigma(z)) == z
  return disc.logits(states);
}

double density_loss(const Discriminator& disc,
                    const Eigen::Ref<const Eigen::MatrixXd>& states,
                    const Eigen::Ref<const Eigen::VectorXd>& labels) {
  if (states.rows() != labels.size())
    throw std::invalid_argument("density_loss: label count mismatch");
  const Eigen::ArrayXd z = disc.logits(states).array();
  // -y*log(sigma) - (1-y)*log(1-sigma), written with log1p for stability
  const Eigen::ArrayXd y = labels.array();
  const Eigen::ArrayXd softplus =
      z.max(0.0) + (-z.abs()).exp().log1p();  // log(1 + e^z)
  return (softplus - y * z).mean();
}

double density_update(Discriminator& disc,
                      const Eigen::Ref<const Eigen::MatrixXd>& policy_states,
                      const Eigen::Ref<const Eigen::MatrixXd>& demo_states,
                      double lr, RngStream& shuffle_rng) {
  if (policy_states.rows() == 0 || demo_states.rows() == 0)
    throw std::invalid_argument("density_update: empty inputs");

  const Eigen::Index n_policy = policy_states.rows();
  const Eigen::Index n = n_policy + demo_states.rows();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        shuffle_rng.next_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }

  constexpr Eigen::Index kBatch = 64;
  double loss_sum = 0.0;
  for (Eigen::Index start = 0; start < n; start += kBatch) {
    const Eigen::Index b = std::min(kBatch, n - start);
    Eigen::MatrixXd X(b, disc.spec.input_dim);
    Eigen::VectorXd y(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      const Eigen::Index idx = order[start + i];
      if (idx < n_policy) {
        X.row(i) = policy_states.row(idx);
        y[i] = 0.0;
      } else {
        X.row(i) = demo_states.row(idx - n_policy);
        y[i] = 1.0;
      }
    }
    MlpActivations acts;
    const Eigen::VectorXd z = mlp_forward_batch(disc.spec, disc.params, X, &acts);
    const Eigen::ArrayXd za = z.array();
    const Eigen::ArrayXd softplus = za.max(0.0) + (-za.abs()).exp().log1p();
    loss_sum += (softplus - y.array() * za).sum();
    // d loss / d z = sigma(z) - y, averaged over the minibatch
    const Eigen::MatrixXd dZ =
        ((1.0 / (1.0 + (-za).exp()) - y.array()) / static_cast<double>(b))
            .matrix();
    const ParamVector grad = mlp_param_grad(disc.spec, disc.params, acts, dZ);
    disc.adam.step(disc.params, grad, lr);
  }
  return loss_sum / static_cast<double>(n);
}

namespace {

double vector_mean(const Eigen::VectorXd& v) { return v.mean(); }

double vector_std(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / (v.size() - 1));
}

// Single training loop shared by every algorithm so that, with the imitation
// weight at zero, soil/dapg/npg follow bit-identical parameter trajectories
// under a shared seed.
TrainResult run_training(const AlgoConfig& cfg, const EnvSpec& spec,
                         const DemoSet* demos) {
  cfg.validate();
  spec.validate();

  const Algorithm alg = cfg.algorithm;
  const bool uses_imitation = alg == Algorithm::kSoil || alg == Algorithm::kDapg;
  const bool uses_inverse = alg == Algorithm::kSoil;
  const bool uses_matching =
      alg == Algorithm::kChamfer || alg == Algorithm::kDensity;

  if ((uses_imitation || uses_matching) && demos == nullptr)
    throw std::invalid_argument(to_string(alg) + " requires demonstrations");
  if (demos) {
    demos->validate();
    if (demos->obs_dim != spec.obs_dim())
      throw std::invalid_argument(
          "train: demo observation dim does not match environment");
  }
  if (alg == Algorithm::kDapg) {
    if (demos->state_only)
      throw std::invalid_argument("dapg requires demos with actions");
    if (demos->act_dim != spec.action_dim())
      throw std::invalid_argument(
          "dapg: demo action dim does not match environment");
  }
  if ((uses_inverse || uses_matching) && !demos->state_only)
    throw std::invalid_argument(to_string(alg) + " requires state-only demos");

  MlpSpec policy_spec{spec.obs_dim(), cfg.policy_hidden, spec.action_dim()};
  MlpSpec value_spec{spec.obs_dim(), cfg.value_hidden, 1};

  TrainResult result{GaussianPolicy(policy_spec), ValueBaseline(value_spec)};
  {
    RngStream rng(cfg.seed, StreamPurpose::kPolicyInit);
    result.policy.init(rng);
  }
  {
    RngStream rng(cfg.seed, StreamPurpose::kValueInit);
    result.baseline.init(rng);
  }

  std::optional<ReplayBuffer> buffer;
  if (uses_inverse) {
    buffer.emplace(cfg.buffer_capacity, spec.obs_dim(), spec.action_dim());
    result.inverse.reserve(cfg.ensemble_k);
    for (int m = 0; m < cfg.ensemble_k; ++m) {
      InverseModel model(spec.obs_dim(), spec.action_dim(), cfg.inverse_hidden);
      RngStream rng(cfg.seed, StreamPurpose::kInverseInit,
                    static_cast<std::uint64_t>(m));
      model.init(rng);
      result.inverse.push_back(std::move(model));
    }
  }

  std::optional<Discriminator> disc;
  if (alg == Algorithm::kDensity) {
    disc.emplace(spec.obs_dim(), cfg.value_hidden);
    RngStream rng(cfg.seed, StreamPurpose::kDiscriminatorInit);
    disc->init(rng);
  }

  Eigen::MatrixXd demo_states_all;  // matching baselines, includes terminals
  if (uses_matching) demo_states_all = demos->stacked_states(true);

  result.curve.reserve(cfg.n_iter);
  if (cfg.record_params) result.param_trace.reserve(cfg.n_iter);

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    const auto t_start = std::chrono::steady_clock::now();
    IterationMetrics row;
    row.iter = iter;

    // collect trajectories with the current policy
    RolloutSet rollouts =
        collect_rollouts(result.policy, spec, cfg.n_traj, cfg.seed, iter);
    row.env_return_mean = vector_mean(rollouts.env_returns);
    row.env_return_std = vector_std(rollouts.env_returns);
    row.success_rate =
        static_cast<double>(std::count(rollouts.successes.begin(),
                                       rollouts.successes.end(), true)) /
        cfg.n_traj;

    // self-supervised inverse-model training on the replay buffer
    DemoSet relabeled;
    if (uses_inverse) {
      for (const auto& traj : rollouts.trajectories)
        buffer->push_trajectory(traj);
      double loss_sum = 0.0;
      int loss_count = 0;
      for (int j = 0; j < cfg.n_inv; ++j) {
        RngStream rng(cfg.seed, StreamPurpose::kInverseSample,
                      static_cast<std::uint64_t>(iter),
                      static_cast<std::uint64_t>(j));
        const ReplayBuffer::Batch batch =
            buffer->sample_batch(cfg.inv_batch, rng);
        for (auto& model : result.inverse) {
          loss_sum += inv_train_step(model, batch, cfg.inverse_lr);
          ++loss_count;
        }
      }
      if (loss_count > 0) row.inv_loss = loss_sum / loss_count;
      relabeled = ensemble_relabel(*demos, result.inverse);
      if (relabeled.relabel_version != result.inverse.front().version)
        throw std::logic_error("soil: stale relabeled demo set");
    }

    // matching baselines shape the reward stream before advantage estimation
    double shaped_mean = row.env_return_mean;
    if (uses_matching) {
      Eigen::VectorXd shaped_returns(cfg.n_traj);
      for (int j = 0; j < cfg.n_traj; ++j) {
        Trajectory& traj = rollouts.trajectories[j];
        const int T = traj.steps();
        // bonus of the state each action leads to
        const Eigen::MatrixXd visited = traj.states.bottomRows(T);
        const Eigen::VectorXd bonus =
            alg == Algorithm::kChamfer
                ? chamfer_bonus(visited, demo_states_all)
                : density_bonus(*disc, visited);
        *traj.rewards += cfg.w_match * bonus;
        shaped_returns[j] = traj.rewards->sum();
      }
      shaped_mean = vector_mean(shaped_returns);
      if (alg == Algorithm::kDensity) {
        // one classification epoch per outer iteration, after shaping
        Eigen::MatrixXd policy_states(
            cfg.n_traj * (spec.horizon + 1), spec.obs_dim());
        int at = 0;
        for (const auto& traj : rollouts.trajectories) {
          policy_states.middleRows(at, traj.states.rows()) = traj.states;
          at += static_cast<int>(traj.states.rows());
        }
        RngStream rng(cfg.seed, StreamPurpose::kDiscriminatorShuffle,
                      static_cast<std::uint64_t>(iter));
        density_update(*disc, policy_states, demo_states_all, cfg.disc_lr, rng);
      }
    }
    row.shaped_return_mean = shaped_mean;

    // advantages with the pre-fit baseline
    RolloutBatch batch;
    batch.trajectories = std::move(rollouts.trajectories);
    batch.flatten();
    estimate_advantages(batch, result.baseline, cfg.gamma, cfg.gae_lambda);

    // policy gradient, optionally demo-augmented
    ParamVector g = vanilla_pg(result.policy, batch);
    row.surrogate =
        result.policy.log_prob_batch(batch.obs, batch.actions)
            .dot(batch.advantages) /
        static_cast<double>(batch.size());
    const double weight = uses_imitation ? cfg.schedule.weight(iter) : 0.0;
    row.imitation_weight = weight;
    if (uses_imitation && weight > 0.0 && iter >= cfg.relabel_warmup) {
      const DemoSet& demo_pairs = uses_inverse ? relabeled : *demos;
      g += imitation_gradient(result.policy, demo_pairs, cfg.schedule, iter);
    }

    const NpgDiagnostics diag = npg_update(result.policy, batch, g, cfg.npg);
    row.grad_norm = diag.grad_norm;
    row.step_scale = diag.step_scale;
    row.realized_kl = diag.realized_kl;

    // value baseline fit for the next iteration
    RngStream shuffle_rng(cfg.seed, StreamPurpose::kBaselineShuffle,
                          static_cast<std::uint64_t>(iter));
    fit_baseline(result.baseline, batch, cfg.baseline_epochs,
                 cfg.baseline_batch, cfg.baseline_lr, shuffle_rng);

    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    result.curve.push_back(row);
    if (cfg.record_params) result.param_trace.push_back(result.policy.params());
  }
  return result;
}

}  // namespace

TrainResult soil_train(const AlgoConfig& cfg, const EnvSpec& spec,
                       const DemoSet& state_only_demos) {
  AlgoConfig c = cfg;
  c.algorithm = Algorithm::kSoil;
  return run_training(c, spec, &state_only_demos);
}

TrainResult dapg_train(const AlgoConfig& cfg, const EnvSpec& spec,
                       const DemoSet& demos_with_actions) {
  AlgoConfig c = cfg;
  c.algorithm = Algorithm::kDapg;
  return run_training(c, spec, &demos_with_actions);
}

TrainResult npg_train(const AlgoConfig& cfg, const EnvSpec& spec) {
  AlgoConfig c = cfg;
  c.algorithm = Algorithm::kNpg;
  return run_training(c, spec, nullptr);
}

TrainResult chamfer_train(const AlgoConfig& cfg, const EnvSpec& spec,
                          const DemoSet& state_only_demos) {
  AlgoConfig c = cfg;
  c.algorithm = Algorithm::kChamfer;
  return run_training(c, spec, &state_only_demos);
}

TrainResult density_train(const AlgoConfig& cfg, const EnvSpec& spec,
                          const DemoSet& state_only_demos) {
  AlgoConfig c = cfg;
  c.algorithm = Algorithm::kDensity;
  return run_training(c, spec, &state_only_demos);
}

TrainResult train(const AlgoConfig& cfg, const EnvSpec& spec,
                  const DemoSet* demos) {
  return run_training(cfg, spec, demos);
}

}  // namespace soil
