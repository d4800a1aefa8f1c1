#ifndef SOIL_MLP_HPP_
#define SOIL_MLP_HPP_

#include <Eigen/Core>
#include <vector>

#include "soil/rng.hpp"

namespace soil {

// Flat vector of all learnable parameters of one approximator. Keeping every
// net's parameters in a single contiguous vector is what makes the Fisher and
// conjugate-gradient algebra straightforward.
using ParamVector = Eigen::VectorXd;

// Fully-connected net with tanh hidden layers and a linear output layer.
// Parameter layout per layer: W (out x in, column-major), then b (out).
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;

  bool operator==(const MlpSpec&) const = default;

  // (out, in) pairs, one per affine layer
  std::vector<std::pair<int, int>> layer_shapes() const;
  int param_count() const;
  void validate() const;
};

// Per-layer activations kept from a forward pass for backprop.
// h[0] is the input batch, h[l] the post-activation of layer l (rows = samples).
struct MlpActivations {
  std::vector<Eigen::MatrixXd> h;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
ParamVector mlp_init_params(const MlpSpec& spec, RngStream& rng);

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const ParamVector& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

// Batch forward, one sample per row. Fills `acts` when given.
Eigen::MatrixXd mlp_forward_batch(const MlpSpec& spec, const ParamVector& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  MlpActivations* acts = nullptr);

// Parameter gradient summed over the batch for upstream dL/dY (rows match X).
ParamVector mlp_param_grad(const MlpSpec& spec, const ParamVector& params,
                           const MlpActivations& acts,
                           const Eigen::Ref<const Eigen::MatrixXd>& dY);

// Per-sample parameter gradients: row b of `rows` receives the gradient of
// sample b's scalar loss whose upstream is dY row b. `rows` must be
// B x param_count. Used to materialize score matrices for the empirical Fisher.
void mlp_param_grad_rows(const MlpSpec& spec, const ParamVector& params,
                         const MlpActivations& acts,
                         const Eigen::Ref<const Eigen::MatrixXd>& dY,
                         Eigen::Ref<Eigen::MatrixXd> rows);

}  // namespace soil

#endif  // SOIL_MLP_HPP_
