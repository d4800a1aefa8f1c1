#include "soil/npg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace soil {

void RolloutBatch::flatten() {
  int n = 0;
  for (const auto& traj : trajectories) {
    traj.validate();
    if (!traj.actions || !traj.rewards)
      throw std::invalid_argument("RolloutBatch: needs actions and rewards");
    n += traj.steps();
  }
  if (n == 0) throw std::invalid_argument("RolloutBatch: empty");
  const int obs_dim = static_cast<int>(trajectories.front().states.cols());
  const int act_dim = static_cast<int>(trajectories.front().actions->cols());
  obs.resize(n, obs_dim);
  actions.resize(n, act_dim);
  int at = 0;
  for (const auto& traj : trajectories) {
    const int T = traj.steps();
    obs.middleRows(at, T) = traj.states.topRows(T);
    actions.middleRows(at, T) = *traj.actions;
    at += T;
  }
}

void estimate_advantages(RolloutBatch& batch, const ValueBaseline& baseline,
                         double gamma, double gae_lambda) {
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("estimate_advantages: gamma must be in (0,1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0)
    throw std::invalid_argument("estimate_advantages: lambda must be in [0,1]");
  if (batch.obs.rows() == 0) batch.flatten();

  const Eigen::Index N = batch.size();
  batch.advantages.resize(N);
  batch.returns.resize(N);

  Eigen::Index at = 0;
  for (const auto& traj : batch.trajectories) {
    const int T = traj.steps();
    // values over all T+1 states of this trajectory, terminal bootstraps 0
    Eigen::VectorXd values = baseline.predict_batch(traj.states);
    values[T] = 0.0;

    double adv = 0.0;
    double ret = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const double r = (*traj.rewards)[t];
      const double delta = r + gamma * values[t + 1] - values[t];
      adv = delta + gamma * gae_lambda * adv;
      ret = r + gamma * ret;
      batch.advantages[at + t] = adv;
      batch.returns[at + t] = ret;
    }
    at += T;
  }

  // batch normalization (population variance)
  if (N > 1) {
    const double mean = batch.advantages.mean();
    const double var = (batch.advantages.array() - mean).square().mean();
    if (var > 0.0)
      batch.advantages = (batch.advantages.array() - mean) / std::sqrt(var);
  }
}

void fit_baseline(ValueBaseline& baseline, const RolloutBatch& batch, int epochs,
                  int batch_size, double lr, RngStream& shuffle_rng) {
  if (epochs <= 0) return;
  if (batch.returns.size() != batch.size())
    throw std::invalid_argument("fit_baseline: returns not computed");

  const Eigen::Index N = batch.size();
  std::vector<Eigen::Index> order(N);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates with the named stream; deterministic across runs
    for (Eigen::Index i = N - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(
          shuffle_rng.next_below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }
    for (Eigen::Index start = 0; start < N; start += batch_size) {
      const Eigen::Index n = std::min<Eigen::Index>(batch_size, N - start);
      Eigen::MatrixXd X(n, batch.obs.cols());
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        X.row(i) = batch.obs.row(order[start + i]);
        y[i] = batch.returns[order[start + i]];
      }
      MlpActivations acts;
      const Eigen::MatrixXd pred =
          mlp_forward_batch(baseline.spec, baseline.params, X, &acts);
      // d/dY of (1/n) sum (pred - y)^2
      const Eigen::MatrixXd dY =
          2.0 / static_cast<double>(n) * (pred.col(0) - y);
      const ParamVector grad =
          mlp_param_grad(baseline.spec, baseline.params, acts, dY);
      baseline.adam.step(baseline.params, grad, lr);
    }
  }
}

ParamVector vanilla_pg(const GaussianPolicy& policy, const RolloutBatch& batch) {
  if (batch.advantages.size() != batch.size())
    throw std::invalid_argument("vanilla_pg: advantages not filled");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  return policy.weighted_score_sum(batch.obs, batch.actions,
                                   batch.advantages * inv_n);
}

ParamVector conjugate_gradient(
    const std::function<ParamVector(const ParamVector&)>& apply_A,
    const ParamVector& b, int iters, double tol) {
  ParamVector x = ParamVector::Zero(b.size());
  if (b.norm() == 0.0) return x;

  ParamVector r = b;  // residual b - A x with x = 0
  ParamVector p = r;
  double rs_old = r.squaredNorm();
  const double threshold = tol * b.norm();

  for (int i = 0; i < iters; ++i) {
    if (std::sqrt(rs_old) <= threshold) break;
    const ParamVector Ap = apply_A(p);
    const double pAp = p.dot(Ap);
    if (!std::isfinite(pAp) || pAp <= 0.0)
      throw std::runtime_error("conjugate_gradient: operator not SPD");
    const double alpha = rs_old / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    const double rs_new = r.squaredNorm();
    if (!std::isfinite(rs_new))
      throw std::runtime_error("conjugate_gradient: non-finite residual");
    p = r + (rs_new / rs_old) * p;
    rs_old = rs_new;
  }
  return x;
}

FisherOperator::FisherOperator(const GaussianPolicy& policy,
                               const Eigen::Ref<const Eigen::MatrixXd>& states,
                               const Eigen::Ref<const Eigen::MatrixXd>& actions,
                               double damping)
    : scores_(policy.score_matrix(states, actions)), damping_(damping) {}

ParamVector FisherOperator::apply(const ParamVector& v) const {
  if (v.size() != scores_.cols())
    throw std::invalid_argument("FisherOperator: vector length mismatch");
  const Eigen::VectorXd Gv = scores_ * v;
  return scores_.transpose() * Gv / static_cast<double>(scores_.rows()) +
         damping_ * v;
}

ParamVector fisher_vector_product(const GaussianPolicy& policy,
                                  const Eigen::Ref<const Eigen::MatrixXd>& states,
                                  const Eigen::Ref<const Eigen::MatrixXd>& actions,
                                  const ParamVector& v, double damping) {
  return FisherOperator(policy, states, actions, damping).apply(v);
}

NpgDiagnostics npg_update(GaussianPolicy& policy, const RolloutBatch& batch,
                          const ParamVector& g, const NpgConfig& cfg) {
  if (cfg.delta_kl <= 0.0)
    throw std::invalid_argument("npg_update: delta_kl must be > 0");
  NpgDiagnostics diag;
  diag.grad_norm = g.norm();
  if (diag.grad_norm == 0.0) return diag;  // nothing to do

  const FisherOperator fisher(policy, batch.obs, batch.actions, cfg.cg_damping);
  const ParamVector x = conjugate_gradient(
      [&fisher](const ParamVector& v) { return fisher.apply(v); }, g,
      cfg.cg_iters, cfg.cg_tol);

  const double gx = g.dot(x);
  if (gx <= 0.0) {
    diag.degenerate = true;
    return diag;
  }
  diag.step_scale = std::sqrt(2.0 * cfg.delta_kl / (gx + cfg.step_eps));

  const GaussianPolicy old_policy = policy;
  policy.set_params(policy.params() + diag.step_scale * x);
  diag.realized_kl = mean_kl(old_policy, policy, batch.obs);
  return diag;
}

}  // namespace soil
