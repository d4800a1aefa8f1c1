#include "soil/bench.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "soil/checkpoint.hpp"
#include "soil/parallel.hpp"

namespace soil {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  algo.validate();
  env.validate();
  if (seeds.empty()) throw ConfigError("config: seed list must be non-empty");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size())
    throw ConfigError("config: seed list must be distinct");
  if (eval_episodes < 1)
    throw ConfigError("config: eval_episodes must be >= 1");
  if (checkpoint_every < 0)
    throw ConfigError("config: checkpoint_every must be >= 0");
  if (demo_count < 1) throw ConfigError("config: demo_count must be >= 1");
  if (out_dir.empty()) throw ConfigError("config: out_dir must be set");
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["schema_version"] = 1;
  j["algorithm"] = to_string(algo.algorithm);
  j["env"] = json::parse(env.to_json());
  j["demos"] = demo_path;
  j["out_dir"] = out_dir;
  j["seeds"] = seeds;
  j["eval_episodes"] = eval_episodes;
  j["checkpoint_every"] = checkpoint_every;
  j["demo_count"] = demo_count;
  if (variants_given) j["variants"] = variants;
  j["iters"] = algo.n_iter;
  j["traj_per_iter"] = algo.n_traj;
  j["inv_updates"] = algo.n_inv;
  j["inv_batch"] = algo.inv_batch;
  j["lambda0"] = algo.schedule.lambda0;
  j["lambda1"] = algo.schedule.lambda1;
  j["relabel_warmup"] = algo.relabel_warmup;
  j["ensemble_k"] = algo.ensemble_k;
  j["delta_kl"] = algo.npg.delta_kl;
  j["cg_iters"] = algo.npg.cg_iters;
  j["cg_tol"] = algo.npg.cg_tol;
  j["cg_damping"] = algo.npg.cg_damping;
  j["gamma"] = algo.gamma;
  j["gae_lambda"] = algo.gae_lambda;
  j["policy_hidden"] = algo.policy_hidden;
  j["value_hidden"] = algo.value_hidden;
  j["inverse_hidden"] = algo.inverse_hidden;
  j["baseline_epochs"] = algo.baseline_epochs;
  j["baseline_batch"] = algo.baseline_batch;
  j["baseline_lr"] = algo.baseline_lr;
  j["inverse_lr"] = algo.inverse_lr;
  j["disc_lr"] = algo.disc_lr;
  j["w_match"] = algo.w_match;
  j["buffer_capacity"] = algo.buffer_capacity;
  return j.dump();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  bool saw_version = false;
  try {
    for (auto& [key, value] : j.items()) {
      if (key == "schema_version") {
        if (value.get<int>() != 1)
          throw ConfigError("config: unsupported schema_version");
        saw_version = true;
      } else if (key == "algorithm") {
        cfg.algo.algorithm = algorithm_from_string(value.get<std::string>());
      } else if (key == "env") {
        cfg.env = EnvSpec::from_json(value.dump());
      } else if (key == "demos") {
        cfg.demo_path = value.is_null() ? "" : value.get<std::string>();
      } else if (key == "out_dir") {
        cfg.out_dir = value.get<std::string>();
      } else if (key == "seeds") {
        cfg.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "eval_episodes") {
        cfg.eval_episodes = value.get<int>();
      } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = value.get<int>();
      } else if (key == "demo_count") {
        cfg.demo_count = value.get<int>();
      } else if (key == "variants") {
        cfg.variants = value.get<std::vector<std::string>>();
        cfg.variants_given = true;
      } else if (key == "iters") {
        cfg.algo.n_iter = value.get<int>();
      } else if (key == "traj_per_iter") {
        cfg.algo.n_traj = value.get<int>();
      } else if (key == "inv_updates") {
        cfg.algo.n_inv = value.get<int>();
      } else if (key == "inv_batch") {
        cfg.algo.inv_batch = value.get<int>();
      } else if (key == "lambda0") {
        cfg.algo.schedule.lambda0 = value.get<double>();
      } else if (key == "lambda1") {
        cfg.algo.schedule.lambda1 = value.get<double>();
      } else if (key == "relabel_warmup") {
        cfg.algo.relabel_warmup = value.get<int>();
      } else if (key == "ensemble_k") {
        cfg.algo.ensemble_k = value.get<int>();
      } else if (key == "delta_kl") {
        cfg.algo.npg.delta_kl = value.get<double>();
      } else if (key == "cg_iters") {
        cfg.algo.npg.cg_iters = value.get<int>();
      } else if (key == "cg_tol") {
        cfg.algo.npg.cg_tol = value.get<double>();
      } else if (key == "cg_damping") {
        cfg.algo.npg.cg_damping = value.get<double>();
      } else if (key == "gamma") {
        cfg.algo.gamma = value.get<double>();
      } else if (key == "gae_lambda") {
        cfg.algo.gae_lambda = value.get<double>();
      } else if (key == "policy_hidden") {
        cfg.algo.policy_hidden = value.get<std::vector<int>>();
      } else if (key == "value_hidden") {
        cfg.algo.value_hidden = value.get<std::vector<int>>();
      } else if (key == "inverse_hidden") {
        cfg.algo.inverse_hidden = value.get<std::vector<int>>();
      } else if (key == "baseline_epochs") {
        cfg.algo.baseline_epochs = value.get<int>();
      } else if (key == "baseline_batch") {
        cfg.algo.baseline_batch = value.get<int>();
      } else if (key == "baseline_lr") {
        cfg.algo.baseline_lr = value.get<double>();
      } else if (key == "inverse_lr") {
        cfg.algo.inverse_lr = value.get<double>();
      } else if (key == "disc_lr") {
        cfg.algo.disc_lr = value.get<double>();
      } else if (key == "w_match") {
        cfg.algo.w_match = value.get<double>();
      } else if (key == "buffer_capacity") {
        cfg.algo.buffer_capacity = value.get<int>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!saw_version) throw ConfigError("config: missing schema_version");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

double final_return(const std::vector<IterationMetrics>& curve) {
  if (curve.empty()) return 0.0;
  const std::size_t window = std::max<std::size_t>(1, curve.size() / 10);
  double sum = 0.0;
  for (std::size_t i = curve.size() - window; i < curve.size(); ++i)
    sum += curve[i].env_return_mean;
  return sum / static_cast<double>(window);
}

void write_metrics_csv(const std::vector<IterationMetrics>& curve,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iter,env_return_mean,env_return_std,shaped_return_mean,"
         "success_rate,inv_loss,imitation_weight,realized_kl\n";
  for (const auto& row : curve) {
    out << row.iter << ',' << fmt(row.env_return_mean) << ','
        << fmt(row.env_return_std) << ',' << fmt(row.shaped_return_mean) << ','
        << fmt(row.success_rate) << ',' << fmt(row.inv_loss) << ','
        << fmt(row.imitation_weight) << ',' << fmt(row.realized_kl) << '\n';
  }
}

void write_diag_csv(const std::vector<IterationMetrics>& curve,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iter,surrogate,grad_norm,step_alpha,realized_kl\n";
  for (const auto& row : curve) {
    out << row.iter << ',' << fmt(row.surrogate) << ',' << fmt(row.grad_norm)
        << ',' << fmt(row.step_scale) << ',' << fmt(row.realized_kl) << '\n';
  }
}

void write_timing_csv(const std::vector<IterationMetrics>& curve,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iter,wall_ms\n";
  for (const auto& row : curve)
    out << row.iter << ',' << fmt(row.wall_ms) << '\n';
}

void cmd_gen_demos(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.demo_path.empty())
    throw ConfigError("gen-demos: set a demo output path (--demos)");
  fs::path path(cfg.demo_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());

  int attempts = 0;
  const DemoSet demos =
      generate_demos(cfg.env, cfg.demo_count, cfg.seeds.front(), &attempts);
  save_demos(demos, cfg.demo_path);

  double mean_return = 0.0;
  for (const auto& traj : demos.trajectories) mean_return += traj.rewards->sum();
  mean_return /= static_cast<double>(demos.trajectories.size());
  log << "wrote " << demos.trajectories.size() << " demos to " << cfg.demo_path
      << " (expert success " << fmt(static_cast<double>(cfg.demo_count) / attempts)
      << ", mean return " << fmt(mean_return) << ")\n";
}

namespace {

// Loads and prepares demos for the configured algorithm; may strip actions
// (with a note) for the state-only methods.
DemoSet prepare_demos(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.demo_path.empty())
    throw ConfigError("algorithm '" + to_string(cfg.algo.algorithm) +
                      "' requires a demo file (--demos)");
  DemoSet demos = load_demos(cfg.demo_path);
  if (demos.obs_dim != cfg.env.obs_dim())
    throw ConfigError("demo file observation dim " +
                      std::to_string(demos.obs_dim) +
                      " does not match the environment (" +
                      std::to_string(cfg.env.obs_dim()) + ")");
  const Algorithm alg = cfg.algo.algorithm;
  if (alg == Algorithm::kDapg) {
    if (demos.state_only)
      throw ConfigError(
          "dapg requires demonstrations with actions; the file passed via "
          "--demos is state-only");
    if (demos.act_dim != cfg.env.action_dim())
      throw ConfigError("demo file action dim does not match the environment");
  } else if (!demos.state_only) {
    log << "note: stripping actions from " << cfg.demo_path
        << " for state-only algorithm '" << to_string(alg) << "'\n";
    demos = strip_actions(demos);
  }
  return demos;
}

RunOutcome run_one_seed(const ExperimentConfig& cfg, const EnvSpec& spec,
                        const DemoSet* demos, std::uint64_t seed,
                        const std::string& run_dir) {
  fs::create_directories(run_dir);
  AlgoConfig ac = cfg.algo;
  ac.seed = seed;
  ac.record_params = cfg.checkpoint_every > 0;

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train(ac, spec, demos);
  const double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

  write_metrics_csv(result.curve, run_dir + "/metrics.csv");
  write_diag_csv(result.curve, run_dir + "/diag.csv");
  write_timing_csv(result.curve, run_dir + "/timing.csv");
  save_policy_checkpoint(result.policy, run_dir + "/policy_final.bin");
  if (!result.inverse.empty())
    save_mlp_checkpoint(result.inverse.front().spec,
                        result.inverse.front().params, "inverse_model",
                        run_dir + "/inverse_final.bin");
  if (cfg.checkpoint_every > 0) {
    for (std::size_t i = 0; i < result.param_trace.size(); ++i) {
      const int iter = static_cast<int>(i) + 1;
      if (iter % cfg.checkpoint_every != 0) continue;
      char name[48];
      std::snprintf(name, sizeof(name), "/policy_iter_%04d.bin", iter);
      GaussianPolicy snapshot(result.policy.mean_spec(), result.param_trace[i]);
      save_policy_checkpoint(snapshot, run_dir + name);
    }
  }

  RunOutcome outcome;
  outcome.seed = seed;
  outcome.run_dir = run_dir;
  outcome.final_return = final_return(result.curve);
  outcome.eval = evaluate_policy(result.policy, spec, cfg.eval_episodes, seed);

  ExperimentConfig snapshot_cfg = cfg;
  snapshot_cfg.seeds = {seed};
  const std::string snapshot = snapshot_cfg.to_json_text();
  json record;
  record["config"] = json::parse(snapshot);
  record["final_return"] = outcome.final_return;
  record["final_eval"] = {{"mean_return", outcome.eval.mean_return},
                          {"std_return", outcome.eval.std_return},
                          {"success_rate", outcome.eval.success_rate},
                          {"episodes", outcome.eval.episodes}};
  record["iterations"] = result.curve.size();
  record["wall_time_ms"] = wall_ms;
  record["fingerprint"] = {{"lib_version", kLibraryVersion},
                           {"config_hash", hex64(fnv1a(snapshot))}};
  std::ofstream rec(run_dir + "/run_record.json", std::ios::binary);
  rec << record.dump(2) << "\n";
  return outcome;
}

}  // namespace

std::vector<RunOutcome> cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::optional<DemoSet> demos;
  if (cfg.algo.algorithm != Algorithm::kNpg) demos = prepare_demos(cfg, log);

  fs::create_directories(cfg.out_dir);
  std::vector<RunOutcome> outcomes(cfg.seeds.size());
  parallel_for_jobs(static_cast<int>(cfg.seeds.size()), [&](int i) {
    const std::uint64_t seed = cfg.seeds[i];
    const std::string run_dir =
        cfg.out_dir + "/seed_" + std::to_string(seed);
    outcomes[i] = run_one_seed(cfg, cfg.env, demos ? &*demos : nullptr, seed,
                               run_dir);
  });

  std::ofstream summary(cfg.out_dir + "/summary.csv", std::ios::binary);
  summary << "seed,final_return,eval_mean_return,eval_success_rate\n";
  for (const auto& o : outcomes) {
    summary << o.seed << ',' << fmt(o.final_return) << ','
            << fmt(o.eval.mean_return) << ',' << fmt(o.eval.success_rate)
            << '\n';
    log << "seed " << o.seed << ": final_return=" << fmt(o.final_return)
        << " eval_return=" << fmt(o.eval.mean_return)
        << " eval_success=" << fmt(o.eval.success_rate) << "\n";
  }
  return outcomes;
}

EvalSummary cmd_eval(const std::string& checkpoint_path, const EnvSpec& spec,
                     int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("eval: episodes must be >= 1");
  spec.validate();
  GaussianPolicy policy = load_policy_checkpoint(checkpoint_path);
  if (policy.obs_dim() != spec.obs_dim() ||
      policy.action_dim() != spec.action_dim())
    throw ConfigError("eval: checkpoint dims do not match the environment");
  return evaluate_policy(policy, spec, episodes, seed);
}

EnvSpec apply_variant(const EnvSpec& base, const std::string& name) {
  try {
    if (name == "mass1") return with_mass(base, 1.0);
    if (name == "mass16") return with_mass(base, 16.0);
    if (name == "mass32") return with_mass(base, 32.0);
    if (name == "links1") return with_links(base, 1);
    if (name == "links2") return with_links(base, 2);
    if (name == "box") return with_object(base, ObjectKind::kBox);
    if (name == "slippery") return with_object(base, ObjectKind::kSlippery);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("variant '" + name + "': " + e.what());
  }
  throw ConfigError("unknown mismatch variant '" + name + "'");
}

std::vector<std::string> default_variants(const EnvSpec& base) {
  if (base.kind == EnvKind::kArmRelocate)
    return {"mass16", "mass32", "links2", "box", "slippery"};
  return {"mass16", "mass32", "box", "slippery"};
}

DemoSet adapt_demo_actions(const DemoSet& demos, const EnvSpec& from,
                           const EnvSpec& to) {
  if (demos.state_only)
    throw ConfigError("adapt_demo_actions: demos carry no actions");
  if (from.action_dim() == to.action_dim()) return demos;
  if (from.kind != EnvKind::kArmRelocate || to.kind != EnvKind::kArmRelocate ||
      to.n_links > from.n_links)
    throw ConfigError("adapt_demo_actions: incompatible action spaces");

  DemoSet out = demos;
  out.act_dim = to.action_dim();
  for (auto& traj : out.trajectories) {
    const Eigen::MatrixXd& a = *traj.actions;
    Eigen::MatrixXd mapped(a.rows(), to.action_dim());
    mapped.leftCols(to.n_links) = a.leftCols(to.n_links);
    mapped.col(to.n_links) = a.col(a.cols() - 1);  // grasp channel
    traj.actions = std::move(mapped);
  }
  out.validate();
  return out;
}

void cmd_mismatch(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.demo_path.empty())
    throw ConfigError("mismatch: baseline demos required (--demos)");
  const DemoSet demos = load_demos(cfg.demo_path);
  if (demos.state_only)
    throw ConfigError(
        "mismatch: demos must include actions (dapg arm of the comparison)");
  if (demos.obs_dim != cfg.env.obs_dim())
    throw ConfigError("mismatch: demo observation dim does not match base env");
  if (demos.env_fingerprint != cfg.env.fingerprint())
    log << "note: demo fingerprint " << demos.env_fingerprint
        << " differs from base env " << cfg.env.fingerprint() << "\n";

  const std::vector<std::string> names =
      cfg.variants_given ? cfg.variants : default_variants(cfg.env);
  struct Job {
    std::string variant;
    Algorithm algo;
    std::uint64_t seed;
    RunOutcome outcome;
  };
  std::vector<Job> jobs;
  for (const auto& name : names) {
    apply_variant(cfg.env, name);  // fail fast on bad names
    for (Algorithm alg : {Algorithm::kSoil, Algorithm::kDapg})
      for (std::uint64_t seed : cfg.seeds)
        jobs.push_back({name, alg, seed, {}});
  }

  fs::create_directories(cfg.out_dir);
  parallel_for_jobs(static_cast<int>(jobs.size()), [&](int i) {
    Job& job = jobs[i];
    const EnvSpec variant_spec = apply_variant(cfg.env, job.variant);
    ExperimentConfig run_cfg = cfg;
    run_cfg.algo.algorithm = job.algo;
    run_cfg.env = variant_spec;
    const DemoSet prepared =
        job.algo == Algorithm::kSoil
            ? strip_actions(demos)
            : adapt_demo_actions(demos, cfg.env, variant_spec);
    const std::string run_dir = cfg.out_dir + "/" + job.variant + "/" +
                                to_string(job.algo) + "/seed_" +
                                std::to_string(job.seed);
    job.outcome = run_one_seed(run_cfg, variant_spec, &prepared, job.seed,
                               run_dir);
  });

  std::ofstream table(cfg.out_dir + "/mismatch_summary.csv", std::ios::binary);
  table << "variant,algo,seed,final_return,success\n";
  for (const auto& job : jobs) {
    table << job.variant << ',' << to_string(job.algo) << ',' << job.seed << ','
          << fmt(job.outcome.final_return) << ','
          << fmt(job.outcome.eval.success_rate) << '\n';
    log << job.variant << " " << to_string(job.algo) << " seed " << job.seed
        << ": final_return=" << fmt(job.outcome.final_return)
        << " success=" << fmt(job.outcome.eval.success_rate) << "\n";
  }
}

void cmd_export_plots(const std::string& run_dir, const std::string& out_path,
                      std::ostream& log) {
  std::map<std::string, std::vector<fs::path>> groups;
  if (!fs::exists(run_dir))
    throw std::runtime_error("export-plots: no such directory: " + run_dir);
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "metrics.csv")
      continue;
    const fs::path seed_dir = entry.path().parent_path();
    if (seed_dir.filename().string().rfind("seed_", 0) != 0) continue;
    fs::path rel = fs::relative(seed_dir.parent_path(), run_dir);
    std::string name = rel.generic_string();
    if (name == ".") name = fs::path(run_dir).filename().string();
    for (auto& c : name)
      if (c == '/') c = '_';
    groups[name].push_back(entry.path());
  }
  if (groups.empty())
    throw std::runtime_error("export-plots: no seed_*/metrics.csv found under " +
                             run_dir);

  // read env_return_mean (column 1) per run
  std::map<std::string, std::vector<std::vector<double>>> curves;
  std::size_t iters = std::numeric_limits<std::size_t>::max();
  for (auto& [name, files] : groups) {
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      std::string line;
      std::getline(in, line);  // header
      std::vector<double> values;
      while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        values.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
      }
      if (values.empty())
        throw std::runtime_error("export-plots: empty metrics in " +
                                 file.string());
      iters = std::min(iters, values.size());
      curves[name].push_back(std::move(values));
    }
  }

  fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream csv(out_path, std::ios::binary);
  if (!csv) throw std::runtime_error("export-plots: cannot open " + out_path);
  csv << "iter";
  for (const auto& [name, runs] : curves) csv << ',' << name << "_mean,"
                                              << name << "_std";
  csv << '\n';
  for (std::size_t it = 0; it < iters; ++it) {
    csv << it;
    for (const auto& [name, runs] : curves) {
      double mean = 0.0;
      for (const auto& run : runs) mean += run[it];
      mean /= static_cast<double>(runs.size());
      double var = 0.0;
      for (const auto& run : runs) var += (run[it] - mean) * (run[it] - mean);
      const double std_dev =
          runs.size() > 1 ? std::sqrt(var / (runs.size() - 1)) : 0.0;
      csv << ',' << fmt(mean) << ',' << fmt(std_dev);
    }
    csv << '\n';
  }
  log << "wrote " << out_path << " (" << curves.size() << " curve groups, "
      << iters << " iterations)\n";
}

}  // namespace soil
