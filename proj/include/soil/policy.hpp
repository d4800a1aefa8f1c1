#ifndef SOIL_POLICY_HPP_
#define SOIL_POLICY_HPP_

#include <Eigen/Core>

#include "soil/mlp.hpp"
#include "soil/rng.hpp"

namespace soil {

// Diagonal-Gaussian policy: MLP mean plus a state-independent learnable
// log-std vector. The parameter vector is [mean-net params, log_std], so the
// whole policy is one flat vector for Fisher/CG purposes.
//
// log_std is clamped to [kLogStdMin, kLogStdMax] wherever the density is
// evaluated, to keep it away from degenerate widths; the clamp has zero
// gradient outside the band.
class GaussianPolicy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  explicit GaussianPolicy(MlpSpec mean_spec);
  GaussianPolicy(MlpSpec mean_spec, ParamVector params);

  int obs_dim() const { return spec_.input_dim; }
  int action_dim() const { return spec_.output_dim; }
  int param_count() const { return spec_.param_count() + spec_.output_dim; }
  const MlpSpec& mean_spec() const { return spec_; }

  const ParamVector& params() const { return params_; }
  void set_params(const ParamVector& p);

  // log_std initialized to zero, mean net per mlp_init_params
  void init(RngStream& rng);

  Eigen::VectorXd stddev() const;

  Eigen::VectorXd mean_action(const Eigen::Ref<const Eigen::VectorXd>& s) const;
  Eigen::MatrixXd mean_batch(const Eigen::Ref<const Eigen::MatrixXd>& S) const;

  // a = mu(s) + sigma .* eps, eps drawn from the stream (action_dim normals)
  Eigen::VectorXd sample_action(const Eigen::Ref<const Eigen::VectorXd>& s,
                                RngStream& rng) const;

  double log_prob(const Eigen::Ref<const Eigen::VectorXd>& s,
                  const Eigen::Ref<const Eigen::VectorXd>& a) const;
  Eigen::VectorXd log_prob_batch(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                 const Eigen::Ref<const Eigen::MatrixXd>& A) const;

  // d log pi(a|s) / d theta, analytic
  ParamVector grad_log_prob(const Eigen::Ref<const Eigen::VectorXd>& s,
                            const Eigen::Ref<const Eigen::VectorXd>& a) const;

  // sum_b w_b * grad log pi(a_b|s_b), batched (caller folds any 1/N into w)
  ParamVector weighted_score_sum(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                 const Eigen::Ref<const Eigen::MatrixXd>& A,
                                 const Eigen::Ref<const Eigen::VectorXd>& w) const;

  // B x param_count matrix whose row b is grad log pi(a_b|s_b)
  Eigen::MatrixXd score_matrix(const Eigen::Ref<const Eigen::MatrixXd>& S,
                               const Eigen::Ref<const Eigen::MatrixXd>& A) const;

 private:
  void check_dims(Eigen::Index s_len, Eigen::Index a_len) const;
  ParamVector mean_params() const { return params_.head(spec_.param_count()); }

  MlpSpec spec_;
  ParamVector params_;
};

// Average closed-form KL(pi_old(.|s) || pi_new(.|s)) over the given states.
double mean_kl(const GaussianPolicy& policy_old, const GaussianPolicy& policy_new,
               const Eigen::Ref<const Eigen::MatrixXd>& states);

}  // namespace soil

#endif  // SOIL_POLICY_HPP_
