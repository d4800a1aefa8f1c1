#include "soil/demos.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace soil {

using json = nlohmann::json;

void Trajectory::validate() const {
  if (states.rows() < 1)
    throw std::invalid_argument("Trajectory: needs at least one state");
  if (!states.allFinite())
    throw std::invalid_argument("Trajectory: non-finite states");
  if (actions) {
    if (actions->rows() != states.rows() - 1)
      throw std::invalid_argument(
          "Trajectory: actions length must be states length - 1");
    if (!actions->allFinite())
      throw std::invalid_argument("Trajectory: non-finite actions");
  }
  if (rewards) {
    if (rewards->size() != states.rows() - 1)
      throw std::invalid_argument(
          "Trajectory: rewards length must be states length - 1");
    if (!rewards->allFinite())
      throw std::invalid_argument("Trajectory: non-finite rewards");
  }
}

void DemoSet::validate() const {
  for (const auto& traj : trajectories) {
    traj.validate();
    if (traj.states.cols() != obs_dim)
      throw std::invalid_argument("DemoSet: observation length mismatch");
    if (state_only && traj.actions)
      throw std::invalid_argument("DemoSet: state_only set but actions present");
    if (traj.actions && traj.actions->cols() != act_dim)
      throw std::invalid_argument("DemoSet: action length mismatch");
  }
}

int DemoSet::total_pairs() const {
  int total = 0;
  for (const auto& traj : trajectories) total += traj.steps();
  return total;
}

Eigen::MatrixXd DemoSet::stacked_states(bool include_terminal) const {
  int rows = 0;
  for (const auto& traj : trajectories)
    rows += static_cast<int>(traj.states.rows()) - (include_terminal ? 0 : 1);
  Eigen::MatrixXd out(rows, obs_dim);
  int at = 0;
  for (const auto& traj : trajectories) {
    const int n =
        static_cast<int>(traj.states.rows()) - (include_terminal ? 0 : 1);
    out.middleRows(at, n) = traj.states.topRows(n);
    at += n;
  }
  return out;
}

namespace {

// Expert gains. Deliberately conservative: demonstrations succeed reliably
// but leave headroom for RL to reach the goal faster.
constexpr double kExpertKp = 2.0;
constexpr double kExpertKd = 1.6;
constexpr double kExpertGraspFactor = 1.2;
// speed kept below the slip threshold while carrying a slippery object
constexpr double kExpertCarrySpeedCap = 0.45;

Eigen::MatrixXd arm_jacobian(const EnvSpec& spec, const EnvState& state) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, spec.n_links);
  double angle = 0.0;
  // column i accumulates contributions of links i..n-1
  std::vector<double> cum(spec.n_links);
  for (int i = 0; i < spec.n_links; ++i) {
    angle += state.q[i];
    cum[i] = angle;
  }
  for (int i = 0; i < spec.n_links; ++i) {
    for (int j = i; j < spec.n_links; ++j) {
      J(0, i) += -env_const::kLinkLength * std::sin(cum[j]);
      J(1, i) += env_const::kLinkLength * std::cos(cum[j]);
    }
  }
  return J;
}

}  // namespace

Eigen::VectorXd scripted_expert_action(const EnvSpec& spec,
                                       const EnvState& state) {
  const Eigen::Vector2d e = effector_position(spec, state);
  const Eigen::Vector2d target = state.attached ? state.goal : state.obj;

  Eigen::VectorXd action = Eigen::VectorXd::Zero(spec.action_dim());
  if (spec.kind == EnvKind::kPointRelocate) {
    Eigen::Vector2d f = kExpertKp * (target - state.p) - kExpertKd * state.v;
    if (state.attached && spec.object_kind == ObjectKind::kSlippery &&
        state.v.norm() > kExpertCarrySpeedCap) {
      f = -2.0 * state.v;  // brake before the object slips
    }
    action.head<2>() = f.cwiseMax(-1.0).cwiseMin(1.0);
  } else {
    const Eigen::MatrixXd J = arm_jacobian(spec, state);
    const Eigen::Vector2d ed = J * state.qd;
    Eigen::Vector2d f = kExpertKp * (target - e) - kExpertKd * ed;
    if (state.attached && spec.object_kind == ObjectKind::kSlippery &&
        ed.norm() > kExpertCarrySpeedCap) {
      f = -2.0 * ed;
    }
    action.head(spec.n_links) =
        (J.transpose() * f).cwiseMax(-1.0).cwiseMin(1.0);
  }
  action[action.size() - 1] =
      (e - state.obj).norm() < kExpertGraspFactor * spec.grasp_radius() ? 1.0
                                                                        : 0.0;
  return action;
}

DemoSet generate_demos(const EnvSpec& spec, int n, std::uint64_t seed,
                       int* attempts_out) {
  if (n < 1) throw std::invalid_argument("generate_demos: n must be >= 1");
  spec.validate();

  DemoSet demos;
  demos.env_fingerprint = spec.fingerprint();
  demos.state_only = false;
  demos.obs_dim = spec.obs_dim();
  demos.act_dim = spec.action_dim();

  const int max_attempts = 10 * n;
  int attempts = 0;
  while (static_cast<int>(demos.trajectories.size()) < n) {
    if (attempts >= max_attempts)
      throw std::runtime_error(
          "generate_demos: expert failed too often (attempt cap " +
          std::to_string(max_attempts) + " reached)");
    RngStream reset_rng(seed, StreamPurpose::kDemoGen,
                        static_cast<std::uint64_t>(attempts));
    ++attempts;

    EnvState state = env_reset(spec, reset_rng);
    Trajectory traj;
    traj.states.resize(spec.horizon + 1, spec.obs_dim());
    traj.actions.emplace(spec.horizon, spec.action_dim());
    traj.rewards.emplace(spec.horizon);
    traj.states.row(0) = observe(spec, state);

    bool success = false;
    for (int t = 0; t < spec.horizon; ++t) {
      const Eigen::VectorXd action = scripted_expert_action(spec, state);
      StepResult step = env_step(spec, state, action);
      traj.actions->row(t) = action;
      (*traj.rewards)[t] = step.reward;
      traj.states.row(t + 1) = observe(spec, step.state);
      state = step.state;
      success = success || is_success(state);
    }
    if (success) demos.trajectories.push_back(std::move(traj));
  }
  if (attempts_out) *attempts_out = attempts;
  demos.validate();
  return demos;
}

DemoSet strip_actions(const DemoSet& demos) {
  DemoSet out = demos;
  for (auto& traj : out.trajectories) traj.actions.reset();
  out.state_only = true;
  out.relabel_version = 0;
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int line) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error("demo file parse error at line " +
                             std::to_string(line) + ": expected 2d array");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw std::runtime_error("demo file parse error at line " +
                               std::to_string(line) + ": ragged 2d array");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

void save_demos(const DemoSet& demos, const std::string& path) {
  demos.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_demos: cannot open " + path);

  json header;
  header["version"] = 1;
  header["env_fingerprint"] = demos.env_fingerprint;
  header["obs_dim"] = demos.obs_dim;
  header["act_dim"] = demos.act_dim;
  header["state_only"] = demos.state_only;
  out << header.dump() << "\n";

  for (const auto& traj : demos.trajectories) {
    json line;
    line["states"] = matrix_to_json(traj.states);
    line["actions"] = traj.actions ? matrix_to_json(*traj.actions) : json();
    if (traj.rewards) {
      json r = json::array();
      for (Eigen::Index i = 0; i < traj.rewards->size(); ++i)
        r.push_back((*traj.rewards)[i]);
      line["rewards"] = std::move(r);
    } else {
      line["rewards"] = json();
    }
    out << line.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_demos: write failed for " + path);
}

DemoSet load_demos(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_demos: cannot open " + path);

  DemoSet demos;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("demo file parse error at line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (line_no == 1) {
        demos.env_fingerprint = j.at("env_fingerprint").get<std::string>();
        demos.obs_dim = j.at("obs_dim").get<int>();
        demos.act_dim = j.at("act_dim").get<int>();
        demos.state_only = j.at("state_only").get<bool>();
        continue;
      }
      Trajectory traj;
      traj.states = matrix_from_json(j.at("states"), line_no);
      if (!j.at("actions").is_null())
        traj.actions = matrix_from_json(j.at("actions"), line_no);
      if (!j.at("rewards").is_null()) {
        const json& r = j.at("rewards");
        Eigen::VectorXd rewards(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) rewards[i] = r[i].get<double>();
        traj.rewards = std::move(rewards);
      }
      traj.validate();
      demos.trajectories.push_back(std::move(traj));
    } catch (const json::exception& e) {
      throw std::runtime_error("demo file parse error at line " +
                               std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("demo file parse error at line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) throw std::runtime_error("load_demos: empty file " + path);
  try {
    demos.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("load_demos: invalid demo set: ") +
                             e.what());
  }
  return demos;
}

}  // namespace soil
