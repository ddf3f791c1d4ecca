#include "slsac/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "slsac/checkpoint.hpp"

namespace slsac {

namespace {

std::string json_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s = buf;
  if (s == "nan" || s == "-nan" || s == "inf" || s == "-inf") return "null";
  return s;
}

// rng stream ids per component
enum StreamId : std::uint64_t {
  kEnvStream = 1,
  kActionStream = 2,
  kSampleStream = 3,
  kTargetActionStream = 4,
  kCostStream = 5,
  kPolicyStream = 6,
  kInitStream = 7,
  kWarmupStream = 8,
};

}  // namespace

std::string MetricsRecord::to_json() const {
  std::string s = "{";
  s += "\"step\":" + std::to_string(step);
  s += ",\"event\":\"" + event + "\"";
  s += ",\"episodes\":" + std::to_string(episodes);
  s += ",\"episode_return\":" + json_number(episode_return);
  s += ",\"episode_cost\":" + json_number(episode_cost);
  s += ",\"lambda\":" + json_number(lambda);
  s += ",\"empirical_cvar\":" + json_number(empirical_cvar);
  s += ",\"critic_cvar\":" + json_number(critic_cvar);
  s += ",\"loss_reward\":" + json_number(loss_reward);
  s += ",\"loss_cost\":" + json_number(loss_cost);
  s += ",\"loss_policy\":" + json_number(loss_policy);
  s += ",\"alpha\":" + json_number(alpha);
  s += "}";
  return s;
}

struct JsonlSink::Impl {
  std::ofstream out;
};

JsonlSink::JsonlSink(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);  // binary: identical bytes everywhere
  if (!impl_->out) throw std::runtime_error("metrics: cannot open " + path);
}

JsonlSink::~JsonlSink() = default;

void JsonlSink::record(const MetricsRecord& r) { impl_->out << r.to_json() << "\n"; }

std::unique_ptr<Env> make_env(const TrainConfig& cfg) {
  if (cfg.env_name == "point_velocity") {
    const int horizon = cfg.env_horizon > 0 ? cfg.env_horizon : 400;
    return std::make_unique<PointVelocityEnv>(cfg.env_v_limit, horizon,
                                              cfg.env_reset_noise);
  }
  if (cfg.env_name == "hazard_nav") {
    const int horizon = cfg.env_horizon > 0 ? cfg.env_horizon : 500;
    const auto mode = cfg.env_cost_mode == "depth" ? HazardCostMode::Depth
                                                   : HazardCostMode::Indicator;
    return std::make_unique<HazardNavEnv>(cfg.env_hazards, cfg.env_seed, horizon, mode);
  }
  throw ConfigError("unknown env.name: " + cfg.env_name);
}

Trainer::Trainer(TrainConfig cfg, std::uint64_t run_seed)
    : cfg_(std::move(cfg)), run_seed_(run_seed), env_(make_env(cfg_)),
      cost_noise_(Rng::substream(run_seed, kCostStream)),
      window_(static_cast<std::size_t>(cfg_.constraint_window)),
      buffer_(cfg_.train_buffer_capacity) {
  cfg_.validate();
  Rng init = Rng::substream(run_seed_, kInitStream);
  const int sdim = env_->state_dim();
  const int adim = env_->action_dim();

  policy_ = GaussianPolicy(sdim, adim, cfg_.net_hidden, init);
  policy_.log_alpha = std::log(cfg_.policy_alpha);
  policy_.alpha_auto = cfg_.policy_alpha_auto;
  policy_.target_entropy = cfg_.policy_target_entropy_auto
                               ? -static_cast<double>(adim)
                               : cfg_.policy_target_entropy;
  policy_.opt.eta = cfg_.optim_eta;

  ensemble_ = RewardEnsemble(cfg_.ensemble_m, sdim, adim, cfg_.net_hidden,
                             parse_aggregation(cfg_.ensemble_aggregation), run_seed_,
                             init);
  for (auto& st : ensemble_.opt) {
    st.eta = cfg_.optim_eta;
    st.bias_factor = cfg_.optim_a;
    st.t_inv = cfg_.optim_t_inv;
    st.clip_c = cfg_.optim_clip_c;
    st.clip_mode = cfg_.optim_clip_mode == "norm" ? ClipMode::GlobalNorm
                                                  : ClipMode::Elementwise;
    st.weight_decay = cfg_.optim_weight_decay;
  }

  cost_critic_ = QuantileCostCritic(sdim, adim, cfg_.net_hidden, 64, init);
  cost_opt_ = OptimizerState::sized_for(cost_critic_.param_count());
  cost_opt_.eta = cfg_.optim_eta;
  cost_opt_.bias_factor = cfg_.optim_a;
  cost_opt_.t_inv = cfg_.optim_t_inv;
  cost_opt_.clip_c = cfg_.optim_clip_c;

  mult_.lambda = cfg_.constraint_lambda_init;
  mult_.eta_lambda = cfg_.constraint_eta_lambda;
  mult_.beta = cfg_.constraint_use_margin
                   ? tightened_beta(cfg_.constraint_beta, cfg_.constraint_margin_delta,
                                    cfg_.constraint_epsilon)
                   : cfg_.constraint_beta;
  mult_.warmup_general = cfg_.constraint_warmup_general;
  mult_.warmup_multiplier = cfg_.constraint_warmup_multiplier;
}

namespace {

// Applies one optimizer step over the cost critic's three parameter blocks.
void cost_critic_step(QuantileCostCritic& critic, const CostCriticGrads& grads,
                      OptimizerState& st, bool use_asgld, Rng& noise) {
  // one shared state over the concatenated parameter vector
  std::vector<double> params(critic.param_count());
  std::size_t off = 0;
  auto gather = [&](std::span<const double> src) {
    std::copy(src.begin(), src.end(), params.begin() + static_cast<std::ptrdiff_t>(off));
    off += src.size();
  };
  gather(critic.trunk.flat());
  gather(critic.embed_w);
  gather(critic.embed_b);
  gather(critic.head.flat());

  std::vector<double> flat_grads(critic.param_count());
  off = 0;
  auto gather_g = [&](std::span<const double> src) {
    std::copy(src.begin(), src.end(),
              flat_grads.begin() + static_cast<std::ptrdiff_t>(off));
    off += src.size();
  };
  gather_g(grads.trunk.flat);
  gather_g(grads.embed_w);
  gather_g(grads.embed_b);
  gather_g(grads.head.flat);

  if (use_asgld) {
    langevin_step(params, flat_grads, st, LangevinVariant::SlsacAsgld, noise);
  } else {
    adamw_step(params, flat_grads, st);
  }

  off = 0;
  auto scatter = [&](std::span<double> dst) {
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(off),
              params.begin() + static_cast<std::ptrdiff_t>(off + dst.size()), dst.begin());
    off += dst.size();
  };
  scatter(critic.trunk.flat_mut());
  scatter(critic.embed_w);
  scatter(critic.embed_b);
  scatter(critic.head.flat_mut());
}

}  // namespace

RunSummary Trainer::run(MetricsSink* sink, const TraceFn* trace) {
  RunSummary summary;
  Rng env_rng = Rng::substream(run_seed_, kEnvStream);
  Rng action_rng = Rng::substream(run_seed_, kActionStream);
  Rng sample_rng = Rng::substream(run_seed_, kSampleStream);
  Rng target_rng = Rng::substream(run_seed_, kTargetActionStream);
  Rng policy_rng = Rng::substream(run_seed_, kPolicyStream);
  Rng warmup_rng = Rng::substream(run_seed_, kWarmupStream);

  const auto cost_optimizer_asgld = cfg_.cost_optimizer == "asgld";
  const auto ens_opt = cfg_.ensemble_optimizer_variant == "adamw"
                           ? EnsembleOptimizer::AdamW
                           : EnsembleOptimizer::Langevin;
  const auto variant = parse_langevin_variant(cfg_.optim_variant);
  const int adim = env_->action_dim();

  auto emit = [&](long step, const char* event, double ep_ret, double ep_cost,
                  double critic_cvar, double lr, double lc, double lp) {
    if (!sink) return;
    MetricsRecord r;
    r.step = step;
    r.event = event;
    r.episodes = summary.episodes;
    r.episode_return = ep_ret;
    r.episode_cost = ep_cost;
    r.lambda = mult_.lambda;
    r.empirical_cvar =
        window_.empty() ? 0.0 : empirical_cvar(window_.values(), cfg_.constraint_epsilon);
    r.critic_cvar = critic_cvar;
    r.loss_reward = lr;
    r.loss_cost = lc;
    r.loss_policy = lp;
    r.alpha = policy_.alpha();
    sink->record(r);
  };

  auto tr = [&](long step, std::string_view event, double value = 0.0) {
    if (trace) (*trace)(step, event, value);
  };

  std::vector<double> state = env_->reset(env_rng);
  double ep_return = 0.0, ep_cost = 0.0;
  double last_ep_return = 0.0, last_ep_cost = 0.0;
  double loss_reward = 0.0, loss_cost = 0.0, loss_policy = 0.0, critic_cvar = 0.0;

  for (long step = 1; step <= cfg_.train_total_steps; ++step) {
    // interact
    std::vector<double> action(adim);
    if (step <= cfg_.constraint_warmup_general) {
      for (double& a : action) a = warmup_rng.uniform(-1.0, 1.0);
    } else {
      action = policy_.sample(state, &action_rng, false).action;
    }
    tr(step, "env_step");
    StepResult res = env_->step(action);

    Transition t;
    t.s = state;
    t.a = action;
    t.r = res.r;
    t.c = res.c;
    t.s_next = res.s_next;
    t.d = res.d;
    buffer_.push(std::move(t));
    tr(step, "store");

    ep_return += res.r;
    ep_cost += res.c;  // undiscounted episode total
    if (res.d) {
      window_.record(ep_cost);
      ++summary.episodes;
      summary.episode_costs.push_back(ep_cost);
      summary.episode_returns.push_back(ep_return);
      emit(step, "episode", ep_return, ep_cost, critic_cvar, loss_reward, loss_cost,
           loss_policy);
      last_ep_return = ep_return;
      last_ep_cost = ep_cost;
      ep_return = 0.0;
      ep_cost = 0.0;
      state = env_->reset(env_rng);
    } else {
      state = std::move(res.s_next);
    }

    // updates
    const bool active = step > cfg_.constraint_warmup_general &&
                        buffer_.size() >= static_cast<std::size_t>(cfg_.train_batch_size);
    if (active) try {
      const auto batch =
          buffer_.sample(static_cast<std::size_t>(cfg_.train_batch_size), sample_rng);

      const auto ens_stats = ensemble_update(ensemble_, batch, policy_, policy_.alpha(),
                                             cfg_.train_gamma, variant, ens_opt,
                                             target_rng);
      loss_reward = ens_stats.mean_loss;
      tr(step, "reward_update", loss_reward);

      const auto cost_res =
          cost_critic_loss(cost_critic_, batch, policy_, cfg_.cost_n_quantiles,
                           cfg_.cost_n_quantiles, cfg_.cost_gamma_c, cfg_.cost_kappa,
                           cost_noise_);
      loss_cost = cost_res.loss;
      cost_critic_step(cost_critic_, cost_res.grads, cost_opt_, cost_optimizer_asgld,
                       cost_noise_);
      tr(step, "cost_update", loss_cost);

      // critic-side CVaR diagnostic on a slice of the batch
      const std::size_t slice = std::min<std::size_t>(batch.size(), 8);
      critic_cvar = 0.0;
      for (std::size_t b = 0; b < slice; ++b)
        critic_cvar += cost_critic_.cvar(batch[b].s, batch[b].a, cfg_.cost_epsilon,
                                         cfg_.cost_n_quantiles, CvarMode::Stratified);
      critic_cvar /= static_cast<double>(slice);
      tr(step, "cvar_estimate", critic_cvar);

      if ((step - cfg_.constraint_warmup_general) % 2 == 0) {
        const auto pol = policy_loss(policy_, ensemble_, cost_critic_, batch,
                                     policy_.alpha(), mult_.lambda, cfg_.cost_epsilon,
                                     cfg_.cost_n_quantiles, policy_rng);
        loss_policy = pol.loss;
        adamw_step(policy_.trunk, pol.grads, policy_.opt);
        const double lp[1] = {pol.mean_log_prob};
        alpha_update(policy_, lp);
        tr(step, "policy_update", loss_policy);

        ensemble_.soft_update_targets(cfg_.train_tau_soft);
        cost_critic_.soft_update_targets(cfg_.train_tau_soft);
        soft_update(policy_.trunk, policy_.trunk_target, cfg_.train_tau_soft);
        tr(step, "soft_update");
      }

      if (!std::isfinite(loss_reward) || !std::isfinite(loss_cost) ||
          !std::isfinite(loss_policy))
        throw NumericalError("non-finite loss at step " + std::to_string(step));
    } catch (const NumericalError&) {
      throw;
    } catch (const std::runtime_error& e) {
      // rejected optimizer steps (non-finite gradients) abort the run
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step));
    }

    if (step > cfg_.constraint_warmup_multiplier) {
      update_lambda(mult_, window_, cfg_.constraint_epsilon, step);
      tr(step, "lambda_update", mult_.lambda);
    }

    if (step % cfg_.train_steps_per_epoch == 0) {
      emit(step, "epoch", last_ep_return, last_ep_cost, critic_cvar, loss_reward,
           loss_cost, loss_policy);
      if (!ensemble_.all_finite() || !cost_critic_.all_finite() ||
          !policy_.trunk.all_finite())
        throw NumericalError("non-finite parameters at step " + std::to_string(step));
    }
  }

  summary.steps = cfg_.train_total_steps;
  summary.final_lambda = mult_.lambda;
  summary.final_alpha = policy_.alpha();
  summary.final_window_cvar =
      window_.empty() ? 0.0 : empirical_cvar(window_.values(), cfg_.constraint_epsilon);

  if (cfg_.train_eval_episodes > 0) {
    auto eval_env = env_->clone();
    summary.eval =
        evaluate(policy_, *eval_env, cfg_.train_eval_episodes, run_seed_ ^ 0xe5a1u);
  }
  return summary;
}

EvalResult evaluate(const GaussianPolicy& policy, Env& env, int episodes,
                    std::uint64_t seed) {
  EvalResult res;
  Rng rng = Rng::substream(seed, 0xd37e);
  for (int e = 0; e < episodes; ++e) {
    auto s = env.reset(rng);
    double ret = 0.0, cost = 0.0;
    while (true) {
      const auto a = policy.sample(s, nullptr, /*deterministic=*/true);
      const auto step = env.step(a.action);
      ret += step.r;
      cost += step.c;
      if (step.d) break;
      s = step.s_next;
    }
    res.returns.push_back(ret);
    res.costs.push_back(cost);
  }
  if (episodes > 0) {
    for (double r : res.returns) res.mean_return += r;
    for (double c : res.costs) res.mean_cost += c;
    res.mean_return /= episodes;
    res.mean_cost /= episodes;
  }
  return res;
}

EvalResult evaluate_random(Env& env, int episodes, std::uint64_t seed) {
  EvalResult res;
  Rng rng = Rng::substream(seed, 0x7a2d);
  std::vector<double> a(env.action_dim());
  for (int e = 0; e < episodes; ++e) {
    auto s = env.reset(rng);
    double ret = 0.0, cost = 0.0;
    while (true) {
      for (double& x : a) x = rng.uniform(-1.0, 1.0);
      const auto step = env.step(a);
      ret += step.r;
      cost += step.c;
      if (step.d) break;
      s = step.s_next;
    }
    res.returns.push_back(ret);
    res.costs.push_back(cost);
  }
  if (episodes > 0) {
    for (double r : res.returns) res.mean_return += r;
    for (double c : res.costs) res.mean_cost += c;
    res.mean_return /= episodes;
    res.mean_cost /= episodes;
  }
  return res;
}

namespace {

void add_mlp(CheckpointWriter& w, const std::string& prefix, const MlpParams& p) {
  for (std::size_t l = 0; l < p.layers().size(); ++l) {
    const auto& spec = p.layers()[l];
    w.add(prefix + "/l" + std::to_string(l) + "/W",
          {static_cast<std::size_t>(spec.out), static_cast<std::size_t>(spec.in)},
          p.weight(l));
    w.add(prefix + "/l" + std::to_string(l) + "/b",
          {static_cast<std::size_t>(spec.out)}, p.bias(l));
  }
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  CheckpointWriter w;
  add_mlp(w, "policy/trunk", policy_.trunk);
  add_mlp(w, "policy/trunk_target", policy_.trunk_target);
  w.add_scalar("policy/log_alpha", policy_.log_alpha);
  for (int i = 0; i < ensemble_.size(); ++i) {
    add_mlp(w, "ensemble/critic" + std::to_string(i), ensemble_.critics[i]);
    add_mlp(w, "ensemble/target" + std::to_string(i), ensemble_.targets[i]);
  }
  add_mlp(w, "cost/trunk", cost_critic_.trunk);
  w.add("cost/embed/W",
        {static_cast<std::size_t>(cost_critic_.hidden_dim()),
         static_cast<std::size_t>(cost_critic_.embed_dim())},
        cost_critic_.embed_w);
  w.add("cost/embed/b", {static_cast<std::size_t>(cost_critic_.hidden_dim())},
        cost_critic_.embed_b);
  add_mlp(w, "cost/head", cost_critic_.head);
  w.add_scalar("constraint/lambda", mult_.lambda);
  w.write(path);
}

GaussianPolicy load_policy(const std::string& checkpoint_path) {
  CheckpointReader r(checkpoint_path);
  // reconstruct trunk dims from the stored layer shapes
  std::vector<int> dims;
  for (int l = 0;; ++l) {
    const std::string key = "policy/trunk/l" + std::to_string(l) + "/W";
    if (!r.has(key)) break;
    const auto shape = r.shape(key);
    if (dims.empty()) dims.push_back(static_cast<int>(shape[1]));
    dims.push_back(static_cast<int>(shape[0]));
  }
  if (dims.size() < 2) throw std::runtime_error("checkpoint: no policy trunk arrays");
  const int action_dim = dims.back() / 2;
  const int state_dim = dims.front();
  Rng dummy(0);
  GaussianPolicy p(state_dim, action_dim, dims[1], dummy);
  MlpParams trunk(dims);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto w = r.array("policy/trunk/l" + std::to_string(l) + "/W");
    const auto b = r.array("policy/trunk/l" + std::to_string(l) + "/b");
    std::copy(w.begin(), w.end(), trunk.weight(l).begin());
    std::copy(b.begin(), b.end(), trunk.bias(l).begin());
  }
  trunk.flat_mut();
  p.trunk = trunk;
  p.trunk_target = trunk;
  if (r.has("policy/log_alpha")) p.log_alpha = r.scalar("policy/log_alpha");
  return p;
}

}  // namespace slsac
