#include "soil/inverse.hpp"

#include <stdexcept>

namespace soil {

ReplayBuffer::ReplayBuffer(int capacity, int obs_dim, int act_dim)
    : capacity_(capacity),
      s_(capacity, obs_dim),
      a_(capacity, act_dim),
      s_next_(capacity, obs_dim) {
  if (capacity < 1)
    throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push_trajectory(const Trajectory& traj) {
  traj.validate();
  if (!traj.actions)
    throw std::invalid_argument("ReplayBuffer: state-only trajectory");
  if (traj.states.cols() != s_.cols() || traj.actions->cols() != a_.cols())
    throw std::invalid_argument("ReplayBuffer: dimension mismatch");
  for (int t = 0; t < traj.steps(); ++t) {
    s_.row(head_) = traj.states.row(t);
    a_.row(head_) = traj.actions->row(t);
    s_next_.row(head_) = traj.states.row(t + 1);
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    ++inserted_;
  }
}

ReplayBuffer::Batch ReplayBuffer::sample_batch(int b, RngStream& rng) const {
  if (size_ == 0) throw std::invalid_argument("ReplayBuffer: empty");
  if (b < 1) throw std::invalid_argument("ReplayBuffer: batch size must be >= 1");
  Batch batch;
  batch.s.resize(b, s_.cols());
  batch.a.resize(b, a_.cols());
  batch.s_next.resize(b, s_next_.cols());
  for (int i = 0; i < b; ++i) {
    const int idx = static_cast<int>(rng.next_below(size_));
    batch.s.row(i) = s_.row(idx);
    batch.a.row(i) = a_.row(idx);
    batch.s_next.row(i) = s_next_.row(idx);
  }
  return batch;
}

void ReplayBuffer::triplet_at(int i, Eigen::VectorXd& s, Eigen::VectorXd& a,
                              Eigen::VectorXd& s_next) const {
  if (i < 0 || i >= size_)
    throw std::invalid_argument("ReplayBuffer: index out of range");
  // oldest element sits at head_ once the ring has wrapped
  const int base = size_ < capacity_ ? 0 : head_;
  const int idx = (base + i) % capacity_;
  s = s_.row(idx);
  a = a_.row(idx);
  s_next = s_next_.row(idx);
}

InverseModel::InverseModel(int obs_dim, int act_dim, std::vector<int> hidden) {
  spec.input_dim = 2 * obs_dim;
  spec.hidden = std::move(hidden);
  spec.output_dim = act_dim;
  spec.validate();
  params = ParamVector::Zero(spec.param_count());
}

Eigen::VectorXd InverseModel::predict(
    const Eigen::Ref<const Eigen::VectorXd>& s,
    const Eigen::Ref<const Eigen::VectorXd>& s_next) const {
  Eigen::VectorXd x(spec.input_dim);
  x << s, s_next;
  return mlp_forward(spec, params, x).cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::MatrixXd InverseModel::predict_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& S,
    const Eigen::Ref<const Eigen::MatrixXd>& S_next, bool clamp) const {
  if (S.rows() != S_next.rows() || S.cols() != S_next.cols() ||
      2 * S.cols() != spec.input_dim)
    throw std::invalid_argument("InverseModel: state pair shape mismatch");
  Eigen::MatrixXd X(S.rows(), spec.input_dim);
  X << S, S_next;
  Eigen::MatrixXd out = mlp_forward_batch(spec, params, X);
  if (clamp) out = out.cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

double inv_loss(const InverseModel& model, const ReplayBuffer::Batch& batch) {
  if (batch.s.rows() == 0) throw std::invalid_argument("inv_loss: empty batch");
  const Eigen::MatrixXd pred =
      model.predict_batch(batch.s, batch.s_next, /*clamp=*/false);
  return (pred - batch.a).rowwise().squaredNorm().mean();
}

double inv_train_step(InverseModel& model, const ReplayBuffer::Batch& batch,
                      double lr) {
  const Eigen::Index B = batch.s.rows();
  if (B == 0) throw std::invalid_argument("inv_train_step: empty batch");
  Eigen::MatrixXd X(B, model.spec.input_dim);
  X << batch.s, batch.s_next;
  MlpActivations acts;
  const Eigen::MatrixXd pred = mlp_forward_batch(model.spec, model.params, X, &acts);
  const double loss = (pred - batch.a).rowwise().squaredNorm().mean();
  if (lr != 0.0) {
    const Eigen::MatrixXd dY =
        2.0 / static_cast<double>(B) * (pred - batch.a);
    const ParamVector grad = mlp_param_grad(model.spec, model.params, acts, dY);
    model.adam.step(model.params, grad, lr);
  }
  ++model.version;
  return loss;
}

DemoSet relabel(const DemoSet& demos, const InverseModel& model) {
  if (!demos.state_only)
    throw std::invalid_argument("relabel: demo set must be state-only");
  if (demos.obs_dim != model.obs_dim())
    throw std::invalid_argument("relabel: observation dim mismatch");

  DemoSet out = demos;
  out.state_only = false;
  out.act_dim = model.act_dim();
  out.relabel_version = model.version;
  for (auto& traj : out.trajectories) {
    const int T = traj.steps();
    if (T == 0) continue;
    traj.actions = model.predict_batch(traj.states.topRows(T),
                                       traj.states.bottomRows(T),
                                       /*clamp=*/true);
  }
  out.validate();
  return out;
}

DemoSet ensemble_relabel(const DemoSet& demos,
                         const std::vector<InverseModel>& ensemble) {
  if (ensemble.empty())
    throw std::invalid_argument("ensemble_relabel: empty ensemble");
  for (const auto& m : ensemble)
    if (m.spec != ensemble.front().spec)
      throw std::invalid_argument("ensemble_relabel: mixed member specs");
  if (!demos.state_only)
    throw std::invalid_argument("ensemble_relabel: demo set must be state-only");
  if (demos.obs_dim != ensemble.front().obs_dim())
    throw std::invalid_argument("ensemble_relabel: observation dim mismatch");

  DemoSet out = demos;
  out.state_only = false;
  out.act_dim = ensemble.front().act_dim();
  std::uint64_t version = 0;
  for (const auto& m : ensemble) version = std::max(version, m.version);
  out.relabel_version = version;
  for (auto& traj : out.trajectories) {
    const int T = traj.steps();
    if (T == 0) continue;
    Eigen::MatrixXd mean =
        Eigen::MatrixXd::Zero(T, ensemble.front().act_dim());
    for (const auto& m : ensemble)
      mean += m.predict_batch(traj.states.topRows(T), traj.states.bottomRows(T),
                              /*clamp=*/false);
    mean /= static_cast<double>(ensemble.size());
    traj.actions = mean.cwiseMax(-1.0).cwiseMin(1.0);
  }
  out.validate();
  return out;
}

}  // namespace soil
