#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace slsac {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every hyperparameter of a run, loadable from a flat dotted-key text file
// ("section.key = value") with repeatable command-line overrides. Defaults
// are the full-scale settings; desk-scale configs override them.
struct TrainConfig {
  // env
  std::string env_name = "point_velocity";  // point_velocity | hazard_nav
  double env_v_limit = 1.0;
  int env_hazards = 4;
  int env_horizon = 0;  // 0 = environment default (400 / 500)
  std::uint64_t env_seed = 0;
  double env_reset_noise = 0.05;
  std::string env_cost_mode = "indicator";  // indicator | depth (hazard_nav)

  // net
  int net_hidden = 256;

  // optim
  double optim_eta = 3e-4;
  double optim_a = 0.1;
  double optim_t_inv = 1e-8;
  double optim_clip_c = 0.7;
  std::string optim_clip_mode = "element";  // element | norm
  std::string optim_variant = "slsac_asgld";
  double optim_weight_decay = 0.0;

  // ensemble
  int ensemble_m = 3;
  std::string ensemble_aggregation = "mean_min";       // mean_min | min_min
  std::string ensemble_optimizer_variant = "langevin";  // langevin | adamw

  // cost critic
  int cost_n_quantiles = 32;
  double cost_kappa = 1.0;
  double cost_epsilon = 0.5;
  double cost_gamma_c = 0.99;
  std::string cost_cvar_mode = "stratified";  // stratified | sampled
  std::string cost_optimizer = "adamw";       // adamw | asgld

  // policy
  double policy_alpha = 0.2;
  bool policy_alpha_auto = true;
  double policy_target_entropy = 0.0;  // used only when not auto
  bool policy_target_entropy_auto = true;  // auto = -action_dim

  // constraint
  double constraint_beta = 25.0;
  double constraint_eta_lambda = 0.01;
  int constraint_window = 64;
  double constraint_epsilon = 0.5;
  long constraint_warmup_general = 5000;
  long constraint_warmup_multiplier = 100000;
  std::string constraint_signal_mode = "cvar";  // cvar | expected
  bool constraint_use_margin = false;
  double constraint_margin_delta = 0.0;
  double constraint_lambda_init = 0.0;

  // train
  long train_total_steps = 100000;
  long train_steps_per_epoch = 2000;
  int train_batch_size = 256;
  double train_gamma = 0.99;
  double train_tau_soft = 0.005;
  int train_eval_episodes = 30;
  std::vector<std::uint64_t> train_seeds = {0, 1, 2, 3, 4};
  std::size_t train_buffer_capacity = 1000000;

  // Parse "section.key = value" lines; '#' starts a comment.
  static TrainConfig from_file(const std::string& path,
                               const std::vector<std::string>& overrides = {});
  static TrainConfig from_overrides(const std::vector<std::string>& overrides);

  // Apply one "key=value" assignment; unknown keys raise ConfigError listing
  // every valid key.
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  // Canonical resolved snapshot; re-parsing it reproduces this config.
  std::string to_text() const;
  std::map<std::string, std::string> entries() const;

  static std::vector<std::string> known_keys();
};

}  // namespace slsac
