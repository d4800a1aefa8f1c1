#include "soil/env.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace soil {

using json = nlohmann::json;
namespace ec = env_const;

std::string to_string(EnvKind kind) {
  return kind == EnvKind::kPointRelocate ? "point_relocate" : "arm_relocate";
}

std::string to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kBall: return "ball";
    case ObjectKind::kBox: return "box";
    case ObjectKind::kSlippery: return "slippery";
  }
  return "ball";
}

EnvKind env_kind_from_string(const std::string& s) {
  if (s == "point_relocate") return EnvKind::kPointRelocate;
  if (s == "arm_relocate") return EnvKind::kArmRelocate;
  throw std::invalid_argument("unknown env kind: " + s);
}

ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "ball") return ObjectKind::kBall;
  if (s == "box") return ObjectKind::kBox;
  if (s == "slippery") return ObjectKind::kSlippery;
  throw std::invalid_argument("unknown object kind: " + s);
}

void EnvSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("EnvSpec: horizon must be >= 1");
  if (dt <= 0.0) throw std::invalid_argument("EnvSpec: dt must be > 0");
  if (mass_multiplier <= 0.0)
    throw std::invalid_argument("EnvSpec: mass_multiplier must be > 0");
  if (n_links < 1 || n_links > ec::kMaxLinks)
    throw std::invalid_argument("EnvSpec: n_links must be in [1,3]");
}

int EnvSpec::obs_dim() const {
  // point: p(2) v(2) obj(2) goal(2) attached(1)
  // arm:   q(3 padded) qd(3 padded) obj(2) goal(2) attached(1)
  return kind == EnvKind::kPointRelocate ? 9 : 2 * ec::kMaxLinks + 5;
}

int EnvSpec::action_dim() const {
  return kind == EnvKind::kPointRelocate ? 3 : n_links + 1;
}

double EnvSpec::grasp_radius() const {
  switch (object_kind) {
    case ObjectKind::kBall: return ec::kGraspRadiusBall;
    case ObjectKind::kBox: return ec::kGraspRadiusBox;
    case ObjectKind::kSlippery: return ec::kGraspRadiusSlippery;
  }
  return ec::kGraspRadiusBall;
}

std::string EnvSpec::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["mass_multiplier"] = mass_multiplier;
  j["n_links"] = n_links;
  j["object_kind"] = to_string(object_kind);
  j["horizon"] = horizon;
  j["dt"] = dt;
  return j.dump();
}

EnvSpec EnvSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  EnvSpec spec;
  for (auto& [key, value] : j.items()) {
    if (key == "kind") spec.kind = env_kind_from_string(value.get<std::string>());
    else if (key == "mass_multiplier") spec.mass_multiplier = value.get<double>();
    else if (key == "n_links") spec.n_links = value.get<int>();
    else if (key == "object_kind")
      spec.object_kind = object_kind_from_string(value.get<std::string>());
    else if (key == "horizon") spec.horizon = value.get<int>();
    else if (key == "dt") spec.dt = value.get<double>();
    else throw std::invalid_argument("EnvSpec: unknown key '" + key + "'");
  }
  spec.validate();
  return spec;
}

std::string EnvSpec::fingerprint() const {
  const std::string canonical = to_json();  // nlohmann dumps keys sorted
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return to_string(kind) + ":" + buf;
}

EnvSpec with_mass(const EnvSpec& spec, double mass_multiplier) {
  EnvSpec out = spec;
  out.mass_multiplier = mass_multiplier;
  out.validate();
  return out;
}

EnvSpec with_links(const EnvSpec& spec, int n_links) {
  if (spec.kind != EnvKind::kArmRelocate)
    throw std::invalid_argument("n_links variant requires arm_relocate");
  EnvSpec out = spec;
  out.n_links = n_links;
  out.validate();
  return out;
}

EnvSpec with_object(const EnvSpec& spec, ObjectKind object_kind) {
  EnvSpec out = spec;
  out.object_kind = object_kind;
  out.validate();
  return out;
}

EnvState env_reset(const EnvSpec& spec, RngStream& episode_rng) {
  spec.validate();
  EnvState s;
  if (spec.kind == EnvKind::kArmRelocate) {
    s.q = Eigen::VectorXd::Zero(spec.n_links);
    s.qd = Eigen::VectorXd::Zero(spec.n_links);
  }
  const double* lo =
      spec.kind == EnvKind::kPointRelocate ? ec::kPointBoxLo : ec::kArmBoxLo;
  const double* hi =
      spec.kind == EnvKind::kPointRelocate ? ec::kPointBoxHi : ec::kArmBoxHi;
  for (int i = 0; i < 2; ++i) s.obj[i] = episode_rng.uniform(lo[i], hi[i]);
  for (int i = 0; i < 2; ++i) s.goal[i] = episode_rng.uniform(lo[i], hi[i]);
  s.attached = false;
  s.t = 0;
  return s;
}

Eigen::Vector2d effector_position(const EnvSpec& spec, const EnvState& state) {
  if (spec.kind == EnvKind::kPointRelocate) return state.p;
  Eigen::Vector2d e = Eigen::Vector2d::Zero();
  double angle = 0.0;
  for (int i = 0; i < spec.n_links; ++i) {
    angle += state.q[i];
    e.x() += ec::kLinkLength * std::cos(angle);
    e.y() += ec::kLinkLength * std::sin(angle);
  }
  return e;
}

double effector_speed(const EnvSpec& spec, const EnvState& state) {
  if (spec.kind == EnvKind::kPointRelocate) return state.v.norm();
  // e_dot = J(q) * qd for the planar chain
  Eigen::Vector2d ed = Eigen::Vector2d::Zero();
  double angle = 0.0;
  double omega = 0.0;
  for (int i = 0; i < spec.n_links; ++i) {
    angle += state.q[i];
    omega += state.qd[i];
    ed.x() += -ec::kLinkLength * std::sin(angle) * omega;
    ed.y() += ec::kLinkLength * std::cos(angle) * omega;
  }
  return ed.norm();
}

StepResult env_step(const EnvSpec& spec, const EnvState& state,
                    const Eigen::Ref<const Eigen::VectorXd>& action) {
  if (action.size() != spec.action_dim())
    throw std::invalid_argument("env_step: action length mismatch");
  if (!action.allFinite())
    throw std::invalid_argument("env_step: non-finite action");

  const Eigen::VectorXd a = action.cwiseMax(-1.0).cwiseMin(1.0);
  StepResult out;
  EnvState& s = out.state;
  s = state;

  if (spec.kind == EnvKind::kPointRelocate) {
    const double mass = ec::kPointMass * spec.mass_multiplier;
    s.v += (ec::kForceScale / mass) * a.head<2>() * spec.dt;
    s.p += s.v * spec.dt;
  } else {
    const double inertia = ec::kJointInertia * spec.mass_multiplier;
    for (int i = 0; i < spec.n_links; ++i) {
      const double qdd =
          (ec::kTorqueScale * a[i] - ec::kJointDamping * s.qd[i]) / inertia;
      s.qd[i] += qdd * spec.dt;
      s.q[i] += s.qd[i] * spec.dt;
    }
  }

  const Eigen::Vector2d e = effector_position(spec, s);
  const double grasp_cmd = a[a.size() - 1];

  if (s.attached) {
    if (spec.object_kind == ObjectKind::kSlippery &&
        effector_speed(spec, s) > ec::kSlipSpeed) {
      s.attached = false;  // object slips, stays where it was
    } else {
      s.obj = e;
    }
  } else if (grasp_cmd > 0.5 && (e - s.obj).norm() < spec.grasp_radius()) {
    s.attached = true;
    s.obj = e;
  }

  out.reward = s.attached ? -(s.obj - s.goal).norm() + ec::kCarryBonus
                          : -(e - s.obj).norm();
  if (is_success(s)) out.reward += ec::kSuccessBonus;

  s.t = state.t + 1;
  out.done = s.t >= spec.horizon;
  return out;
}

Eigen::VectorXd observe(const EnvSpec& spec, const EnvState& state) {
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(spec.obs_dim());
  if (spec.kind == EnvKind::kPointRelocate) {
    obs.segment<2>(0) = state.p;
    obs.segment<2>(2) = state.v;
    obs.segment<2>(4) = state.obj;
    obs.segment<2>(6) = state.goal;
    obs[8] = state.attached ? 1.0 : 0.0;
  } else {
    obs.segment(0, spec.n_links) = state.q;  // removed links stay zero
    obs.segment(ec::kMaxLinks, spec.n_links) = state.qd;
    obs.segment<2>(2 * ec::kMaxLinks) = state.obj;
    obs.segment<2>(2 * ec::kMaxLinks + 2) = state.goal;
    obs[2 * ec::kMaxLinks + 4] = state.attached ? 1.0 : 0.0;
  }
  return obs;
}

EnvState state_from_obs(const EnvSpec& spec,
                        const Eigen::Ref<const Eigen::VectorXd>& obs) {
  if (obs.size() != spec.obs_dim())
    throw std::invalid_argument("state_from_obs: observation length mismatch");
  EnvState s;
  if (spec.kind == EnvKind::kPointRelocate) {
    s.p = obs.segment<2>(0);
    s.v = obs.segment<2>(2);
    s.obj = obs.segment<2>(4);
    s.goal = obs.segment<2>(6);
    s.attached = obs[8] > 0.5;
  } else {
    s.q = obs.segment(0, spec.n_links);
    s.qd = obs.segment(ec::kMaxLinks, spec.n_links);
    s.obj = obs.segment<2>(2 * ec::kMaxLinks);
    s.goal = obs.segment<2>(2 * ec::kMaxLinks + 2);
    s.attached = obs[2 * ec::kMaxLinks + 4] > 0.5;
  }
  s.t = 0;
  return s;
}

}  // namespace soil
