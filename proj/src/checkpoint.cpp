#include "soil/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace soil {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

void write_checkpoint(const json& header, const ParamVector& params,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::pair<json, ParamVector> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("checkpoint: missing header in " + path);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint: bad header in " + path + ": " +
                             e.what());
  }
  const auto count = header.at("param_count").get<Eigen::Index>();
  ParamVector params(count);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
    throw std::runtime_error("checkpoint: truncated parameter block in " + path);
  return {std::move(header), std::move(params)};
}

json spec_to_json(const MlpSpec& spec) {
  json j;
  j["input_dim"] = spec.input_dim;
  j["hidden"] = spec.hidden;
  j["output_dim"] = spec.output_dim;
  j["activation"] = "tanh";
  return j;
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden = j.at("hidden").get<std::vector<int>>();
  spec.output_dim = j.at("output_dim").get<int>();
  if (j.at("activation").get<std::string>() != "tanh")
    throw std::runtime_error("checkpoint: unsupported activation");
  return spec;
}

}  // namespace

void save_mlp_checkpoint(const MlpSpec& spec, const ParamVector& params,
                         const std::string& model, const std::string& path) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument("checkpoint: parameter length mismatch");
  json header;
  header["version"] = 1;
  header["model"] = model;
  header["spec"] = spec_to_json(spec);
  header["param_count"] = params.size();
  write_checkpoint(header, params, path);
}

MlpCheckpoint load_mlp_checkpoint(const std::string& path) {
  auto [header, params] = read_checkpoint(path);
  MlpCheckpoint ckpt;
  ckpt.model = header.at("model").get<std::string>();
  ckpt.spec = spec_from_json(header.at("spec"));
  ckpt.params = std::move(params);
  if (ckpt.model != "gaussian_policy" &&
      ckpt.params.size() != ckpt.spec.param_count())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  return ckpt;
}

void save_policy_checkpoint(const GaussianPolicy& policy,
                            const std::string& path) {
  json header;
  header["version"] = 1;
  header["model"] = "gaussian_policy";
  header["spec"] = spec_to_json(policy.mean_spec());
  header["param_count"] = policy.params().size();
  write_checkpoint(header, policy.params(), path);
}

GaussianPolicy load_policy_checkpoint(const std::string& path) {
  auto [header, params] = read_checkpoint(path);
  if (header.at("model").get<std::string>() != "gaussian_policy")
    throw std::runtime_error("checkpoint: not a policy checkpoint: " + path);
  MlpSpec spec = spec_from_json(header.at("spec"));
  if (params.size() != spec.param_count() + spec.output_dim)
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  return GaussianPolicy(std::move(spec), std::move(params));
}

}  // namespace soil
