#include "slsac/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace slsac {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a real number, got '" + v + "'");
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

std::vector<Field> fields() {
  std::vector<Field> f;
  auto add_s = [&](const std::string& k, std::string TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return c.*p; },
                 [p](TrainConfig& c, const std::string& v) { c.*p = v; }});
  };
  auto add_d = [&](const std::string& k, double TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return fmt_double(c.*p); },
                 [p, k](TrainConfig& c, const std::string& v) { c.*p = parse_double(k, v); }});
  };
  auto add_i = [&](const std::string& k, int TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return std::to_string(c.*p); },
                 [p, k](TrainConfig& c, const std::string& v) {
                   c.*p = static_cast<int>(parse_long(k, v));
                 }});
  };
  auto add_l = [&](const std::string& k, long TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return std::to_string(c.*p); },
                 [p, k](TrainConfig& c, const std::string& v) { c.*p = parse_long(k, v); }});
  };
  auto add_b = [&](const std::string& k, bool TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return c.*p ? "true" : "false"; },
                 [p, k](TrainConfig& c, const std::string& v) { c.*p = parse_bool(k, v); }});
  };
  auto add_u = [&](const std::string& k, std::uint64_t TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return std::to_string(c.*p); },
                 [p, k](TrainConfig& c, const std::string& v) {
                   c.*p = static_cast<std::uint64_t>(parse_long(k, v));
                 }});
  };
  auto add_z = [&](const std::string& k, std::size_t TrainConfig::* p) {
    f.push_back({k, [p](const TrainConfig& c) { return std::to_string(c.*p); },
                 [p, k](TrainConfig& c, const std::string& v) {
                   c.*p = static_cast<std::size_t>(parse_long(k, v));
                 }});
  };

  add_s("env.name", &TrainConfig::env_name);
  add_d("env.v_limit", &TrainConfig::env_v_limit);
  add_i("env.hazards", &TrainConfig::env_hazards);
  add_i("env.horizon", &TrainConfig::env_horizon);
  add_u("env.seed", &TrainConfig::env_seed);
  add_d("env.reset_noise", &TrainConfig::env_reset_noise);
  add_s("env.cost_mode", &TrainConfig::env_cost_mode);

  add_i("net.hidden", &TrainConfig::net_hidden);

  add_d("optim.eta", &TrainConfig::optim_eta);
  add_d("optim.a", &TrainConfig::optim_a);
  add_d("optim.t_inv", &TrainConfig::optim_t_inv);
  add_d("optim.clip_c", &TrainConfig::optim_clip_c);
  add_s("optim.clip_mode", &TrainConfig::optim_clip_mode);
  add_s("optim.variant", &TrainConfig::optim_variant);
  add_d("optim.weight_decay", &TrainConfig::optim_weight_decay);

  add_i("ensemble.m", &TrainConfig::ensemble_m);
  add_s("ensemble.aggregation", &TrainConfig::ensemble_aggregation);
  add_s("ensemble.optimizer_variant", &TrainConfig::ensemble_optimizer_variant);

  add_i("cost.n_quantiles", &TrainConfig::cost_n_quantiles);
  add_d("cost.kappa", &TrainConfig::cost_kappa);
  add_d("cost.epsilon", &TrainConfig::cost_epsilon);
  add_d("cost.gamma_c", &TrainConfig::cost_gamma_c);
  add_s("cost.cvar_mode", &TrainConfig::cost_cvar_mode);
  add_s("cost.optimizer", &TrainConfig::cost_optimizer);

  add_d("policy.alpha", &TrainConfig::policy_alpha);
  add_b("policy.alpha_auto", &TrainConfig::policy_alpha_auto);
  add_b("policy.target_entropy_auto", &TrainConfig::policy_target_entropy_auto);
  add_d("policy.target_entropy", &TrainConfig::policy_target_entropy);

  add_d("constraint.beta", &TrainConfig::constraint_beta);
  add_d("constraint.eta_lambda", &TrainConfig::constraint_eta_lambda);
  add_i("constraint.window", &TrainConfig::constraint_window);
  add_d("constraint.epsilon", &TrainConfig::constraint_epsilon);
  add_l("constraint.warmup_general", &TrainConfig::constraint_warmup_general);
  add_l("constraint.warmup_multiplier", &TrainConfig::constraint_warmup_multiplier);
  add_s("constraint.signal_mode", &TrainConfig::constraint_signal_mode);
  add_b("constraint.use_margin", &TrainConfig::constraint_use_margin);
  add_d("constraint.margin_delta", &TrainConfig::constraint_margin_delta);
  add_d("constraint.lambda_init", &TrainConfig::constraint_lambda_init);

  add_l("train.total_steps", &TrainConfig::train_total_steps);
  add_l("train.steps_per_epoch", &TrainConfig::train_steps_per_epoch);
  add_i("train.batch_size", &TrainConfig::train_batch_size);
  add_d("train.gamma", &TrainConfig::train_gamma);
  add_d("train.tau_soft", &TrainConfig::train_tau_soft);
  add_i("train.eval_episodes", &TrainConfig::train_eval_episodes);
  add_z("train.buffer_capacity", &TrainConfig::train_buffer_capacity);

  // comma-separated seed list
  f.push_back(
      {"train.seeds",
       [](const TrainConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.train_seeds.size(); ++i) {
           if (i) out += ",";
           out += std::to_string(c.train_seeds[i]);
         }
         return out;
       },
       [](TrainConfig& c, const std::string& v) {
         std::vector<std::uint64_t> seeds;
         std::stringstream ss(v);
         std::string tok;
         while (std::getline(ss, tok, ',')) {
           tok = trim(tok);
           if (tok.empty()) continue;
           seeds.push_back(static_cast<std::uint64_t>(parse_long("train.seeds", tok)));
         }
         if (seeds.empty()) throw ConfigError("config: train.seeds needs at least one seed");
         c.train_seeds = std::move(seeds);
       }});
  return f;
}

const std::vector<Field>& field_table() {
  static const std::vector<Field> table = fields();
  return table;
}

}  // namespace

std::vector<std::string> TrainConfig::known_keys() {
  std::vector<std::string> keys;
  for (const auto& f : field_table()) keys.push_back(f.key);
  return keys;
}

void TrainConfig::apply(const std::string& key, const std::string& value) {
  for (const auto& f : field_table()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  std::string msg = "config: unknown key '" + key + "'. Valid keys:";
  for (const auto& k : known_keys()) msg += "\n  " + k;
  throw ConfigError(msg);
}

TrainConfig TrainConfig::from_file(const std::string& path,
                                   const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read file: " + path);
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override must look like key=value, got '" + ov + "'");
    cfg.apply(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::from_overrides(const std::vector<std::string>& overrides) {
  TrainConfig cfg;
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override must look like key=value, got '" + ov + "'");
    cfg.apply(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(env_name == "point_velocity" || env_name == "hazard_nav",
          "env.name must be point_velocity or hazard_nav");
  require(env_cost_mode == "indicator" || env_cost_mode == "depth",
          "env.cost_mode must be indicator or depth");
  require(env_horizon >= 0, "env.horizon must be >= 0");
  require(net_hidden > 0, "net.hidden must be > 0");
  require(optim_eta > 0, "optim.eta must be > 0");
  require(optim_t_inv >= 0, "optim.t_inv must be >= 0");
  require(optim_clip_c > 0, "optim.clip_c must be > 0");
  require(optim_clip_mode == "element" || optim_clip_mode == "norm",
          "optim.clip_mode must be element or norm");
  require(optim_variant == "vanilla_sgld" || optim_variant == "psgld" ||
              optim_variant == "full_asgld" || optim_variant == "slsac_asgld",
          "optim.variant must be one of vanilla_sgld|psgld|full_asgld|slsac_asgld");
  require(optim_weight_decay >= 0, "optim.weight_decay must be >= 0");
  require(ensemble_m >= 1, "ensemble.m must be >= 1");
  require(ensemble_aggregation == "mean_min" || ensemble_aggregation == "min_min",
          "ensemble.aggregation must be mean_min or min_min");
  require(ensemble_optimizer_variant == "langevin" || ensemble_optimizer_variant == "adamw",
          "ensemble.optimizer_variant must be langevin or adamw");
  require(cost_n_quantiles >= 1, "cost.n_quantiles must be >= 1");
  require(cost_kappa > 0, "cost.kappa must be > 0");
  require(cost_epsilon > 0 && cost_epsilon <= 1, "cost.epsilon must be in (0, 1]");
  require(cost_gamma_c >= 0 && cost_gamma_c < 1, "cost.gamma_c must be in [0, 1)");
  require(cost_cvar_mode == "stratified" || cost_cvar_mode == "sampled",
          "cost.cvar_mode must be stratified or sampled");
  require(cost_optimizer == "adamw" || cost_optimizer == "asgld",
          "cost.optimizer must be adamw or asgld");
  require(policy_alpha > 0, "policy.alpha must be > 0");
  require(constraint_eta_lambda > 0, "constraint.eta_lambda must be > 0");
  require(constraint_window >= 1, "constraint.window must be >= 1");
  require(constraint_epsilon > 0 && constraint_epsilon <= 1,
          "constraint.epsilon must be in (0, 1]");
  require(constraint_warmup_general >= 0, "constraint.warmup_general must be >= 0");
  require(constraint_warmup_multiplier >= 0, "constraint.warmup_multiplier must be >= 0");
  require(constraint_signal_mode == "cvar" || constraint_signal_mode == "expected",
          "constraint.signal_mode must be cvar or expected");
  require(constraint_lambda_init >= 0, "constraint.lambda_init must be >= 0");
  require(train_total_steps >= 0, "train.total_steps must be >= 0");
  require(train_steps_per_epoch > 0, "train.steps_per_epoch must be > 0");
  require(train_batch_size >= 1, "train.batch_size must be >= 1");
  require(static_cast<std::size_t>(train_batch_size) <= train_buffer_capacity,
          "train.batch_size must not exceed train.buffer_capacity");
  require(train_gamma >= 0 && train_gamma < 1, "train.gamma must be in [0, 1)");
  require(train_tau_soft >= 0 && train_tau_soft <= 1, "train.tau_soft must be in [0, 1]");
  require(train_eval_episodes >= 0, "train.eval_episodes must be >= 0");
  require(!train_seeds.empty(), "train.seeds must not be empty");
  require(train_buffer_capacity >= 1, "train.buffer_capacity must be >= 1");
}

std::map<std::string, std::string> TrainConfig::entries() const {
  std::map<std::string, std::string> out;
  for (const auto& f : field_table()) out[f.key] = f.get(*this);
  return out;
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace slsac
