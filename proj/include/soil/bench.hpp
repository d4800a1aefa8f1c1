#ifndef SOIL_BENCH_HPP_
#define SOIL_BENCH_HPP_

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "soil/algos.hpp"

namespace soil {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Invalid configuration or incompatible inputs; exits with code 2 at the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full experiment description: training parameters, environment, demo source,
// seeds and output location. Parsed from JSON with a schema version; unknown
// keys are rejected.
struct ExperimentConfig {
  AlgoConfig algo;
  EnvSpec env;
  std::string demo_path;
  std::string out_dir = "runs/out";
  std::vector<std::uint64_t> seeds{0};
  int eval_episodes = 20;
  int checkpoint_every = 50;
  int demo_count = 25;
  std::vector<std::string> variants;  // mismatch presets; empty = kind defaults
  bool variants_given = false;

  void validate() const;
  std::string to_json_text() const;  // canonical snapshot, defaults included
  static ExperimentConfig from_json_text(const std::string& text);
};

// Mean env return over the last tenth of training (at least one iteration),
// the "final return" reported by summaries and the mismatch table.
double final_return(const std::vector<IterationMetrics>& curve);

// Learning-curve CSV with the pinned column set. Timing goes to a sidecar so
// the metrics file stays byte-identical across reruns.
void write_metrics_csv(const std::vector<IterationMetrics>& curve,
                       const std::string& path);
void write_diag_csv(const std::vector<IterationMetrics>& curve,
                    const std::string& path);
void write_timing_csv(const std::vector<IterationMetrics>& curve,
                      const std::string& path);

// Outcome of one seed's training run (metrics paths plus the eval summary).
struct RunOutcome {
  std::uint64_t seed = 0;
  std::string run_dir;
  double final_return = 0.0;
  EvalSummary eval;
};

// Commands backing the CLI. All of them confine side effects to the
// configured output locations and throw ConfigError for bad configurations.
void cmd_gen_demos(const ExperimentConfig& cfg, std::ostream& log);
std::vector<RunOutcome> cmd_train(const ExperimentConfig& cfg, std::ostream& log);
EvalSummary cmd_eval(const std::string& checkpoint_path, const EnvSpec& spec,
                     int episodes, std::uint64_t seed);
void cmd_mismatch(const ExperimentConfig& cfg, std::ostream& log);
void cmd_export_plots(const std::string& run_dir, const std::string& out_path,
                      std::ostream& log);

// Maps demo actions recorded on `from` onto the action space of `to`
// (keeps the torques of surviving links plus the grasp channel). Identity
// when the action spaces already agree.
DemoSet adapt_demo_actions(const DemoSet& demos, const EnvSpec& from,
                           const EnvSpec& to);

// Named mismatch presets ("mass1", "mass16", "mass32", "links1", "links2",
// "box", "slippery") applied to a base spec.
EnvSpec apply_variant(const EnvSpec& base, const std::string& name);
std::vector<std::string> default_variants(const EnvSpec& base);

}  // namespace soil

#endif  // SOIL_BENCH_HPP_
