/* C interface to the state-only imitation learning library.
 *
 * All functions return soil_status; on failure a thread-local message is
 * available via soil_last_error() until the next call on the same thread.
 * Handles are opaque and owned by the caller via the matching _destroy().
 */
#ifndef SOIL_C_H_
#define SOIL_C_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum soil_status {
  SOIL_OK = 0,
  SOIL_ERR_CONFIG = 2, /* invalid configuration or incompatible inputs */
  SOIL_ERR_RUNTIME = 3 /* I/O or execution failure */
} soil_status;

const char* soil_version(void);
const char* soil_last_error(void);

/* ---- experiment commands (config = experiment JSON, see README) ---- */

/* Writes the demo file named by the config's "demos" path. */
soil_status soil_gen_demos(const char* config_json);

/* Trains every configured seed; outputs land under the config's out_dir. */
soil_status soil_train_run(const char* config_json);

/* Deterministic mean-action evaluation of a policy checkpoint. The summary
 * (mean_return, std_return, success_rate, episodes) is written as JSON into
 * the caller's buffer. */
soil_status soil_eval_run(const char* checkpoint_path, const char* env_json,
                          int episodes, uint64_t seed, char* summary_json,
                          size_t summary_cap);

/* Demonstration-mismatch suite: trains soil and dapg on each variant with the
 * original demos and writes mismatch_summary.csv under out_dir. */
soil_status soil_mismatch_run(const char* config_json);

/* Aggregates seed_*/
/* metrics.csv groups under run_dir into a per-iteration mean/std table. */
soil_status soil_export_plots(const char* run_dir, const char* out_csv);

/* ---- environments ---- */

typedef struct soil_env soil_env;

soil_status soil_env_create(const char* spec_json, soil_env** out);
void soil_env_destroy(soil_env* env);
int soil_env_obs_dim(const soil_env* env);
int soil_env_action_dim(const soil_env* env);
int soil_env_horizon(const soil_env* env);

/* Resets with an episode stream derived from `seed`; writes obs_dim doubles. */
soil_status soil_env_reset(soil_env* env, uint64_t seed, double* obs);

/* Steps the wrapped state; writes obs_dim doubles, the reward and done flag. */
soil_status soil_env_step(soil_env* env, const double* action, int action_len,
                          double* obs, double* reward, int* done);

/* ---- demo sets ---- */

typedef struct soil_demoset soil_demoset;

soil_status soil_demos_load(const char* path, soil_demoset** out);
void soil_demos_destroy(soil_demoset* demos);
int soil_demos_count(const soil_demoset* demos);
int soil_demos_state_only(const soil_demoset* demos);
int soil_demos_obs_dim(const soil_demoset* demos);
soil_status soil_demos_strip(soil_demoset* demos);
soil_status soil_demos_save(const soil_demoset* demos, const char* path);

/* ---- policies ---- */

typedef struct soil_policy soil_policy;

soil_status soil_policy_load(const char* checkpoint_path, soil_policy** out);
void soil_policy_destroy(soil_policy* policy);
int soil_policy_obs_dim(const soil_policy* policy);
int soil_policy_action_dim(const soil_policy* policy);
soil_status soil_policy_mean_action(const soil_policy* policy, const double* obs,
                                    int obs_len, double* action);

#ifdef __cplusplus
}
#endif

#endif /* SOIL_C_H_ */
