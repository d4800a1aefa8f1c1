#include "soil/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace soil {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
}

GaussianPolicy::GaussianPolicy(MlpSpec mean_spec) : spec_(std::move(mean_spec)) {
  spec_.validate();
  params_ = ParamVector::Zero(param_count());
}

GaussianPolicy::GaussianPolicy(MlpSpec mean_spec, ParamVector params)
    : spec_(std::move(mean_spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != param_count())
    throw std::invalid_argument("GaussianPolicy: parameter length mismatch");
}

void GaussianPolicy::set_params(const ParamVector& p) {
  if (p.size() != param_count())
    throw std::invalid_argument("GaussianPolicy: parameter length mismatch");
  if (!p.allFinite())
    throw std::invalid_argument("GaussianPolicy: non-finite parameters");
  params_ = p;
}

void GaussianPolicy::init(RngStream& rng) {
  params_.head(spec_.param_count()) = mlp_init_params(spec_, rng);
  params_.tail(spec_.output_dim).setZero();  // log_std = 0
}

Eigen::VectorXd GaussianPolicy::stddev() const {
  return params_.tail(spec_.output_dim)
      .array()
      .min(kLogStdMax)
      .max(kLogStdMin)
      .exp();
}

void GaussianPolicy::check_dims(Eigen::Index s_len, Eigen::Index a_len) const {
  if (s_len != spec_.input_dim)
    throw std::invalid_argument("GaussianPolicy: state length mismatch");
  if (a_len >= 0 && a_len != spec_.output_dim)
    throw std::invalid_argument("GaussianPolicy: action length mismatch");
}

Eigen::VectorXd GaussianPolicy::mean_action(
    const Eigen::Ref<const Eigen::VectorXd>& s) const {
  check_dims(s.size(), -1);
  return mlp_forward(spec_, mean_params(), s);
}

Eigen::MatrixXd GaussianPolicy::mean_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& S) const {
  check_dims(S.cols(), -1);
  return mlp_forward_batch(spec_, mean_params(), S);
}

Eigen::VectorXd GaussianPolicy::sample_action(
    const Eigen::Ref<const Eigen::VectorXd>& s, RngStream& rng) const {
  Eigen::VectorXd mu = mean_action(s);
  const Eigen::VectorXd sigma = stddev();
  for (int i = 0; i < mu.size(); ++i) mu[i] += sigma[i] * rng.normal();
  return mu;
}

double GaussianPolicy::log_prob(const Eigen::Ref<const Eigen::VectorXd>& s,
                                const Eigen::Ref<const Eigen::VectorXd>& a) const {
  check_dims(s.size(), a.size());
  if (!s.allFinite() || !a.allFinite())
    throw std::invalid_argument("log_prob: non-finite inputs");
  const Eigen::VectorXd mu = mean_action(s);
  const Eigen::VectorXd sigma = stddev();
  const Eigen::ArrayXd z = (a - mu).array() / sigma.array();
  return -0.5 * z.square().sum() - sigma.array().log().sum() -
         0.5 * spec_.output_dim * kLog2Pi;
}

Eigen::VectorXd GaussianPolicy::log_prob_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& S,
    const Eigen::Ref<const Eigen::MatrixXd>& A) const {
  check_dims(S.cols(), A.cols());
  if (S.rows() != A.rows())
    throw std::invalid_argument("log_prob_batch: row count mismatch");
  const Eigen::MatrixXd M = mean_batch(S);
  const Eigen::VectorXd sigma = stddev();
  Eigen::ArrayXXd Z = (A - M).array().rowwise() / sigma.transpose().array();
  return (-0.5 * Z.square().rowwise().sum() - sigma.array().log().sum() -
          0.5 * spec_.output_dim * kLog2Pi)
      .matrix();
}

ParamVector GaussianPolicy::grad_log_prob(
    const Eigen::Ref<const Eigen::VectorXd>& s,
    const Eigen::Ref<const Eigen::VectorXd>& a) const {
  Eigen::MatrixXd S = s.transpose();
  Eigen::MatrixXd A = a.transpose();
  return weighted_score_sum(S, A, Eigen::VectorXd::Ones(1));
}

ParamVector GaussianPolicy::weighted_score_sum(
    const Eigen::Ref<const Eigen::MatrixXd>& S,
    const Eigen::Ref<const Eigen::MatrixXd>& A,
    const Eigen::Ref<const Eigen::VectorXd>& w) const {
  check_dims(S.cols(), A.cols());
  if (S.rows() != A.rows() || S.rows() != w.size())
    throw std::invalid_argument("weighted_score_sum: row count mismatch");
  if (!S.allFinite() || !A.allFinite())
    throw std::invalid_argument("weighted_score_sum: non-finite inputs");

  MlpActivations acts;
  const ParamVector mp = mean_params();
  const Eigen::MatrixXd M = mlp_forward_batch(spec_, mp, S, &acts);
  const Eigen::VectorXd sigma = stddev();
  const Eigen::ArrayXd inv_var = sigma.array().square().inverse();

  // d log p / d mu = (a - mu) / sigma^2, weighted per sample
  Eigen::MatrixXd dM =
      ((A - M).array().rowwise() * inv_var.transpose()).colwise() * w.array();

  ParamVector grad(param_count());
  grad.head(spec_.param_count()) = mlp_param_grad(spec_, mp, acts, dM);

  // d log p / d log_std_i = z_i^2 - 1, zero where the clamp is active
  const Eigen::ArrayXXd Z =
      (A - M).array().rowwise() / sigma.transpose().array();
  Eigen::ArrayXd dls =
      ((Z.square() - 1.0).colwise() * w.array()).colwise().sum().transpose();
  const Eigen::ArrayXd ls = params_.tail(spec_.output_dim).array();
  dls *= ((ls > kLogStdMin) && (ls < kLogStdMax)).cast<double>();
  grad.tail(spec_.output_dim) = dls.matrix();
  return grad;
}

Eigen::MatrixXd GaussianPolicy::score_matrix(
    const Eigen::Ref<const Eigen::MatrixXd>& S,
    const Eigen::Ref<const Eigen::MatrixXd>& A) const {
  check_dims(S.cols(), A.cols());
  if (S.rows() != A.rows())
    throw std::invalid_argument("score_matrix: row count mismatch");

  MlpActivations acts;
  const ParamVector mp = mean_params();
  const Eigen::MatrixXd M = mlp_forward_batch(spec_, mp, S, &acts);
  const Eigen::VectorXd sigma = stddev();
  const Eigen::ArrayXd inv_var = sigma.array().square().inverse();
  const Eigen::MatrixXd dM =
      ((A - M).array().rowwise() * inv_var.transpose()).matrix();

  const Eigen::Index B = S.rows();
  const int mlp_count = spec_.param_count();
  Eigen::MatrixXd G(B, param_count());
  mlp_param_grad_rows(spec_, mp, acts, dM, G.leftCols(mlp_count));

  const Eigen::ArrayXXd Z =
      (A - M).array().rowwise() / sigma.transpose().array();
  const Eigen::ArrayXd ls = params_.tail(spec_.output_dim).array();
  const Eigen::ArrayXd mask =
      ((ls > kLogStdMin) && (ls < kLogStdMax)).cast<double>();
  G.rightCols(spec_.output_dim) =
      ((Z.square() - 1.0).rowwise() * mask.transpose()).matrix();
  return G;
}

double mean_kl(const GaussianPolicy& policy_old, const GaussianPolicy& policy_new,
               const Eigen::Ref<const Eigen::MatrixXd>& states) {
  if (policy_old.action_dim() != policy_new.action_dim() ||
      policy_old.obs_dim() != policy_new.obs_dim())
    throw std::invalid_argument("mean_kl: incompatible policies");
  if (states.rows() == 0)
    throw std::invalid_argument("mean_kl: empty state list");

  const Eigen::MatrixXd M1 = policy_old.mean_batch(states);
  const Eigen::MatrixXd M2 = policy_new.mean_batch(states);
  const Eigen::ArrayXd s1 = policy_old.stddev().array();
  const Eigen::ArrayXd s2 = policy_new.stddev().array();

  const double log_ratio = (s2.log() - s1.log()).sum();
  const double var_term = (s1.square() / (2.0 * s2.square()) - 0.5).sum();
  const Eigen::ArrayXd inv_2var2 = 1.0 / (2.0 * s2.square());
  const double mean_term =
      ((M1 - M2).array().square().rowwise() * inv_2var2.transpose())
          .rowwise()
          .sum()
          .mean();
  return log_ratio + var_term + mean_term;
}

}  // namespace soil
