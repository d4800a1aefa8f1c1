#ifndef SOIL_OPTIM_HPP_
#define SOIL_OPTIM_HPP_

#include "soil/mlp.hpp"

namespace soil {

// Adam with bias correction. Used for the value baseline, the inverse
// dynamics model, and the density discriminator.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;

  void reset(Eigen::Index n) {
    m = Eigen::VectorXd::Zero(n);
    v = Eigen::VectorXd::Zero(n);
    t = 0;
  }

  void step(ParamVector& params, const ParamVector& grad, double lr) {
    if (m.size() != params.size()) reset(params.size());
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    params.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace soil

#endif  // SOIL_OPTIM_HPP_
