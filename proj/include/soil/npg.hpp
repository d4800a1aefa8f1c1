#ifndef SOIL_NPG_HPP_
#define SOIL_NPG_HPP_

#include <Eigen/Core>
#include <functional>

#include "soil/demos.hpp"
#include "soil/optim.hpp"
#include "soil/policy.hpp"

namespace soil {

// On-policy batch with flat (s, a, A) views over all step tuples.
// estimate_advantages fills `advantages` (batch-normalized) and `returns`
// (undiscounted by gamma? no: discounted returns-to-go, the baseline targets).
struct RolloutBatch {
  std::vector<Trajectory> trajectories;  // actions and rewards present
  Eigen::MatrixXd obs;                   // N x obs_dim, non-terminal states
  Eigen::MatrixXd actions;               // N x act_dim
  Eigen::VectorXd advantages;            // N
  Eigen::VectorXd returns;               // N

  void flatten();  // fills obs/actions from trajectories
  Eigen::Index size() const { return obs.rows(); }
};

struct ValueBaseline {
  MlpSpec spec;          // obs_dim -> 1
  ParamVector params;
  AdamState adam;

  explicit ValueBaseline(MlpSpec s) : spec(std::move(s)) {
    params = ParamVector::Zero(spec.param_count());
  }
  void init(RngStream& rng) { params = mlp_init_params(spec, rng); }
  double predict(const Eigen::Ref<const Eigen::VectorXd>& s) const {
    return mlp_forward(spec, params, s)[0];
  }
  Eigen::VectorXd predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& S) const {
    return mlp_forward_batch(spec, params, S);
  }
};

// GAE(gamma, lambda) with terminal bootstrap zero, then batch normalization
// to zero mean / unit variance (skipped for degenerate batches).
void estimate_advantages(RolloutBatch& batch, const ValueBaseline& baseline,
                         double gamma, double gae_lambda);

// Adam regression of V(s) onto the batch's discounted returns.
void fit_baseline(ValueBaseline& baseline, const RolloutBatch& batch, int epochs,
                  int batch_size, double lr, RngStream& shuffle_rng);

// Eq.-style vanilla policy gradient, mean over step tuples:
// (1/N) sum_t grad log pi(a_t|s_t) * A_t
ParamVector vanilla_pg(const GaussianPolicy& policy, const RolloutBatch& batch);

// Standard conjugate gradient for symmetric positive definite operators.
ParamVector conjugate_gradient(
    const std::function<ParamVector(const ParamVector&)>& apply_A,
    const ParamVector& b, int iters, double tol);

// Empirical Fisher as score outer products over the batch, plus damping:
// F v = (1/N) sum_s g_s (g_s^T v) + damping * v.
// Scores are materialized once; apply() is two mat-vecs.
class FisherOperator {
 public:
  FisherOperator(const GaussianPolicy& policy,
                 const Eigen::Ref<const Eigen::MatrixXd>& states,
                 const Eigen::Ref<const Eigen::MatrixXd>& actions,
                 double damping);
  ParamVector apply(const ParamVector& v) const;
  double damping() const { return damping_; }

 private:
  Eigen::MatrixXd scores_;  // N x P
  double damping_;
};

// Convenience wrapper matching the flat operation signature.
ParamVector fisher_vector_product(const GaussianPolicy& policy,
                                  const Eigen::Ref<const Eigen::MatrixXd>& states,
                                  const Eigen::Ref<const Eigen::MatrixXd>& actions,
                                  const ParamVector& v, double damping);

struct NpgDiagnostics {
  double grad_norm = 0.0;
  double step_scale = 0.0;   // alpha
  double realized_kl = 0.0;  // mean KL(old, new) on the batch states
  bool degenerate = false;   // g^T x <= 0: update skipped
};

struct NpgConfig {
  double delta_kl = 0.01;
  int cg_iters = 25;
  double cg_tol = 1e-10;
  double cg_damping = 1e-4;
  double step_eps = 1e-8;
};

// Natural-gradient step along F^-1 g with KL budget delta:
// alpha = sqrt(2 delta / (g^T F^-1 g + eps)). The caller provides g so the
// same update serves pure RL and the demo-augmented variants.
NpgDiagnostics npg_update(GaussianPolicy& policy, const RolloutBatch& batch,
                          const ParamVector& g, const NpgConfig& cfg);

}  // namespace soil

#endif  // SOIL_NPG_HPP_
