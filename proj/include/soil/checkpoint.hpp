#ifndef SOIL_CHECKPOINT_HPP_
#define SOIL_CHECKPOINT_HPP_

#include <string>

#include "soil/mlp.hpp"
#include "soil/policy.hpp"

namespace soil {

// Checkpoint format shared by all approximators: one JSON header line
// (model kind, layer dims, activation, parameter count), then the raw
// parameter vector as little-endian IEEE-754 doubles.
void save_mlp_checkpoint(const MlpSpec& spec, const ParamVector& params,
                         const std::string& model, const std::string& path);

struct MlpCheckpoint {
  MlpSpec spec;
  ParamVector params;
  std::string model;
};

MlpCheckpoint load_mlp_checkpoint(const std::string& path);

void save_policy_checkpoint(const GaussianPolicy& policy, const std::string& path);
GaussianPolicy load_policy_checkpoint(const std::string& path);

}  // namespace soil

#endif  // SOIL_CHECKPOINT_HPP_
