#ifndef SOIL_INVERSE_HPP_
#define SOIL_INVERSE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "soil/demos.hpp"
#include "soil/optim.hpp"

namespace soil {

// FIFO ring of (s_t, a_t, s_{t+1}) triplets from policy rollouts.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim, int act_dim);

  int capacity() const { return capacity_; }
  int size() const { return size_; }
  std::int64_t total_inserted() const { return inserted_; }

  void push_trajectory(const Trajectory& traj);

  // B i.i.d. uniform draws with replacement.
  struct Batch {
    Eigen::MatrixXd s;
    Eigen::MatrixXd a;
    Eigen::MatrixXd s_next;
  };
  Batch sample_batch(int b, RngStream& rng) const;

  // triplet at logical position i (0 = oldest), for tests
  void triplet_at(int i, Eigen::VectorXd& s, Eigen::VectorXd& a,
                  Eigen::VectorXd& s_next) const;

 private:
  int capacity_;
  int size_ = 0;
  int head_ = 0;  // next write slot
  std::int64_t inserted_ = 0;
  Eigen::MatrixXd s_, a_, s_next_;
};

// MLP h_phi(s_t, s_{t+1}) -> a predicting the action between two consecutive
// states. Trained on the raw net output; predictions used for relabeling are
// clamped to the action bounds [-1, 1].
struct InverseModel {
  MlpSpec spec;  // input 2*obs_dim, output act_dim
  ParamVector params;
  AdamState adam;
  std::uint64_t version = 0;  // bumped by every train step

  InverseModel(int obs_dim, int act_dim, std::vector<int> hidden);
  void init(RngStream& rng) { params = mlp_init_params(spec, rng); }

  int obs_dim() const { return spec.input_dim / 2; }
  int act_dim() const { return spec.output_dim; }

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& s,
                          const Eigen::Ref<const Eigen::VectorXd>& s_next) const;
  Eigen::MatrixXd predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                const Eigen::Ref<const Eigen::MatrixXd>& S_next,
                                bool clamp) const;
};

// Mean over the batch of the squared Euclidean error ||h(s,s') - a||^2.
double inv_loss(const InverseModel& model, const ReplayBuffer::Batch& batch);

// One Adam step on inv_loss; returns the pre-step loss.
double inv_train_step(InverseModel& model, const ReplayBuffer::Batch& batch,
                      double lr);

// Complete a state-only demo set with predicted actions (clamped to [-1,1]);
// states are untouched and the result carries the model version.
DemoSet relabel(const DemoSet& demos, const InverseModel& model);

// Mean prediction over ensemble members, then clamp.
DemoSet ensemble_relabel(const DemoSet& demos,
                         const std::vector<InverseModel>& ensemble);

}  // namespace soil

#endif  // SOIL_INVERSE_HPP_
