#include "soil/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace soil {

std::vector<std::pair<int, int>> MlpSpec::layer_shapes() const {
  std::vector<std::pair<int, int>> shapes;
  int in = input_dim;
  for (int h : hidden) {
    shapes.emplace_back(h, in);
    in = h;
  }
  shapes.emplace_back(output_dim, in);
  return shapes;
}

int MlpSpec::param_count() const {
  int count = 0;
  for (auto [out, in] : layer_shapes()) count += out * in + out;
  return count;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("MlpSpec: dims must be >= 1");
  for (int h : hidden)
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
}

ParamVector mlp_init_params(const MlpSpec& spec, RngStream& rng) {
  spec.validate();
  ParamVector params(spec.param_count());
  int offset = 0;
  for (auto [out, in] : spec.layer_shapes()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < out * in; ++i)
      params[offset + i] = rng.uniform(-bound, bound);
    offset += out * in;
    params.segment(offset, out).setZero();
    offset += out;
  }
  return params;
}

namespace {

void check_params(const MlpSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument("mlp: parameter vector length mismatch");
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const ParamVector& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_params(spec, params);
  if (x.size() != spec.input_dim)
    throw std::invalid_argument("mlp_forward: input length mismatch");
  Eigen::VectorXd h = x;
  int offset = 0;
  const auto shapes = spec.layer_shapes();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    auto [out, in] = shapes[l];
    Eigen::Map<const Eigen::MatrixXd> W(params.data() + offset, out, in);
    offset += out * in;
    Eigen::Map<const Eigen::VectorXd> b(params.data() + offset, out);
    offset += out;
    Eigen::VectorXd z = W * h + b;
    h = (l + 1 < shapes.size()) ? z.array().tanh().matrix() : z;
  }
  return h;
}

Eigen::MatrixXd mlp_forward_batch(const MlpSpec& spec, const ParamVector& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  MlpActivations* acts) {
  check_params(spec, params);
  if (X.cols() != spec.input_dim)
    throw std::invalid_argument("mlp_forward_batch: input width mismatch");
  Eigen::MatrixXd h = X;
  if (acts) {
    acts->h.clear();
    acts->h.push_back(h);
  }
  int offset = 0;
  const auto shapes = spec.layer_shapes();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    auto [out, in] = shapes[l];
    Eigen::Map<const Eigen::MatrixXd> W(params.data() + offset, out, in);
    offset += out * in;
    Eigen::Map<const Eigen::VectorXd> b(params.data() + offset, out);
    offset += out;
    Eigen::MatrixXd z = (h * W.transpose()).rowwise() + b.transpose();
    h = (l + 1 < shapes.size()) ? z.array().tanh().matrix() : z;
    if (acts) acts->h.push_back(h);
  }
  return h;
}

namespace {

// Shared delta recursion: returns per-layer upstream gradients dL/dZ_l.
std::vector<Eigen::MatrixXd> backprop_deltas(
    const MlpSpec& spec, const ParamVector& params, const MlpActivations& acts,
    const Eigen::Ref<const Eigen::MatrixXd>& dY) {
  const auto shapes = spec.layer_shapes();
  if (acts.h.size() != shapes.size() + 1)
    throw std::invalid_argument("mlp backprop: activations missing");
  if (dY.rows() != acts.h[0].rows() || dY.cols() != spec.output_dim)
    throw std::invalid_argument("mlp backprop: upstream shape mismatch");

  // parameter offsets of each layer's weight block
  std::vector<int> w_offsets(shapes.size());
  int offset = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    w_offsets[l] = offset;
    offset += shapes[l].first * shapes[l].second + shapes[l].first;
  }

  std::vector<Eigen::MatrixXd> deltas(shapes.size());
  deltas.back() = dY;  // linear output layer
  for (int l = static_cast<int>(shapes.size()) - 1; l > 0; --l) {
    auto [out, in] = shapes[l];
    Eigen::Map<const Eigen::MatrixXd> W(params.data() + w_offsets[l], out, in);
    // tanh'(z) = 1 - h^2 with h the stored post-activation
    deltas[l - 1] = (deltas[l] * W).array() *
                    (1.0 - acts.h[l].array().square());
  }
  return deltas;
}

}  // namespace

ParamVector mlp_param_grad(const MlpSpec& spec, const ParamVector& params,
                           const MlpActivations& acts,
                           const Eigen::Ref<const Eigen::MatrixXd>& dY) {
  const auto shapes = spec.layer_shapes();
  const auto deltas = backprop_deltas(spec, params, acts, dY);
  ParamVector grad(spec.param_count());
  int offset = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    auto [out, in] = shapes[l];
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + offset, out, in);
    dW.noalias() = deltas[l].transpose() * acts.h[l];
    offset += out * in;
    Eigen::Map<Eigen::VectorXd> db(grad.data() + offset, out);
    db = deltas[l].colwise().sum();
    offset += out;
  }
  return grad;
}

void mlp_param_grad_rows(const MlpSpec& spec, const ParamVector& params,
                         const MlpActivations& acts,
                         const Eigen::Ref<const Eigen::MatrixXd>& dY,
                         Eigen::Ref<Eigen::MatrixXd> rows) {
  const auto shapes = spec.layer_shapes();
  const auto deltas = backprop_deltas(spec, params, acts, dY);
  const Eigen::Index B = dY.rows();
  if (rows.rows() != B || rows.cols() != spec.param_count())
    throw std::invalid_argument("mlp_param_grad_rows: output shape mismatch");
  for (Eigen::Index b = 0; b < B; ++b) {
    int offset = 0;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      auto [out, in] = shapes[l];
      // row view of the flattened W block, column-major: entry (o,i) at i*out+o
      for (int i = 0; i < in; ++i)
        rows.block(b, offset + i * out, 1, out) =
            acts.h[l](b, i) * deltas[l].row(b);
      offset += out * in;
      rows.block(b, offset, 1, out) = deltas[l].row(b);
      offset += out;
    }
  }
}

}  // namespace soil
