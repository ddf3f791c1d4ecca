#include "slsac/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "slsac/plotting.hpp"
#include "slsac/risk_verify.hpp"
#include "slsac/trainer.hpp"

namespace fs = std::filesystem;

namespace slsac {

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_fingerprint(const TrainConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg.to_text())));
  return buf;
}

void write_manifest(const fs::path& dir, const TrainConfig& cfg) {
  nlohmann::json j;
  j["artifact_version"] = std::string(kVersion) + "+cfg." + config_fingerprint(cfg);
  j["seeds"] = cfg.train_seeds;
  j["config"] = cfg.entries();
  j["layout"] = {{"config", "config_resolved.cfg"},
                 {"per_seed", "seed_<k>/metrics.jsonl, seed_<k>/checkpoint.slsac"}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << j.dump(2) << "\n";
  std::ofstream cfg_out(dir / "config_resolved.cfg", std::ios::binary);
  cfg_out << cfg.to_text();
}

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return TrainConfig::from_overrides(overrides);
  return TrainConfig::from_file(path, overrides);
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool numerical_abort = false;
  std::string error;
  RunSummary summary;
};

// Runs every seed of the config, one isolated worker per seed.
std::vector<SeedOutcome> run_seeds(const TrainConfig& cfg, const fs::path& run_dir,
                                   int parallel, bool quiet) {
  fs::create_directories(run_dir);
  write_manifest(run_dir, cfg);

  std::vector<SeedOutcome> outcomes(cfg.train_seeds.size());
  std::mutex print_mu;
  auto work = [&](std::size_t idx) {
    const std::uint64_t seed = cfg.train_seeds[idx];
    auto& out = outcomes[idx];
    out.seed = seed;
    const fs::path seed_dir = run_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    try {
      Trainer trainer(cfg, seed);
      JsonlSink sink((seed_dir / "metrics.jsonl").string());
      out.summary = trainer.run(&sink);
      trainer.save_checkpoint((seed_dir / "checkpoint.slsac").string());
      if (!quiet) {
        std::lock_guard<std::mutex> lock(print_mu);
        std::printf("seed %llu: episodes=%ld eval_return=%.2f eval_cost=%.2f "
                    "lambda=%.3f window_cvar=%.2f\n",
                    static_cast<unsigned long long>(seed), out.summary.episodes,
                    out.summary.eval.mean_return, out.summary.eval.mean_cost,
                    out.summary.final_lambda, out.summary.final_window_cvar);
      }
    } catch (const NumericalError& e) {
      out.numerical_abort = true;
      out.error = e.what();
    } catch (const std::exception& e) {
      out.numerical_abort = false;
      out.error = e.what();
    }
  };

  if (parallel <= 1) {
    for (std::size_t i = 0; i < outcomes.size(); ++i) work(i);
  } else {
    std::vector<std::thread> threads;
    std::size_t next = 0;
    std::mutex mu;
    for (int t = 0; t < parallel; ++t)
      threads.emplace_back([&] {
        while (true) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= outcomes.size()) return;
            i = next++;
          }
          work(i);
        }
      });
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

}  // namespace

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SLSAC_OUT_DIR"); env && *env) return env;
  return "runs";
}

int cmd_train(const TrainOptions& opts) {
  TrainConfig cfg;
  try {
    cfg = load_config(opts.config_path, opts.overrides);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }
  const fs::path run_dir = fs::path(resolve_out_dir(opts.out_dir)) / opts.run_name;
  const auto outcomes = run_seeds(cfg, run_dir, opts.parallel, opts.quiet);
  for (const auto& o : outcomes) {
    if (!o.error.empty()) {
      std::cerr << "seed " << o.seed << " failed: " << o.error << "\n";
      return o.numerical_abort ? kExitNumerical : kExitUsage;
    }
  }
  return kExitOk;
}

int cmd_eval(const EvalOptions& opts) {
  try {
    std::string checkpoint = opts.checkpoint;
    TrainConfig cfg;
    if (!opts.run_dir.empty()) {
      const fs::path dir(opts.run_dir);
      checkpoint = (dir / "checkpoint.slsac").string();
      const fs::path cfg_path = dir.parent_path() / "config_resolved.cfg";
      cfg = TrainConfig::from_file(cfg_path.string(), opts.overrides);
    } else if (!opts.config_path.empty()) {
      cfg = TrainConfig::from_file(opts.config_path, opts.overrides);
    } else {
      cfg = TrainConfig::from_overrides(opts.overrides);
    }
    if (checkpoint.empty()) {
      std::cerr << "eval: need --run or --checkpoint\n";
      return kExitUsage;
    }
    const auto policy = load_policy(checkpoint);
    auto env = make_env(cfg);
    const auto res = evaluate(policy, *env, opts.episodes, opts.seed);
    std::printf("episodes=%d mean_return=%.4f mean_cost=%.4f\n", opts.episodes,
                res.mean_return, res.mean_cost);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_ablate(const AblateOptions& opts) {
  struct Cell {
    std::string label;
    std::vector<std::string> overrides;
  };
  std::vector<Cell> cells;
  if (opts.axis == "optimizer") {
    for (const char* v : {"vanilla_sgld", "psgld", "full_asgld", "slsac_asgld"})
      cells.push_back({v, {std::string("optim.variant=") + v}});
  } else if (opts.axis == "epsilon") {
    for (const char* v : {"0.2", "0.5", "0.75", "1.0"})
      cells.push_back({std::string("eps_") + v,
                       {std::string("cost.epsilon=") + v,
                        std::string("constraint.epsilon=") + v}});
  } else if (opts.axis == "aggregation") {
    for (const char* v : {"mean_min", "min_min"})
      cells.push_back({v, {std::string("ensemble.aggregation=") + v}});
  } else if (opts.axis == "m") {
    for (const char* v : {"1", "3", "5", "10"})
      cells.push_back({std::string("m_") + v, {std::string("ensemble.m=") + v}});
  } else if (opts.axis == "cost_optimizer") {
    for (const char* v : {"adamw", "asgld"})
      cells.push_back({std::string("cost_") + v, {std::string("cost.optimizer=") + v}});
  } else {
    std::cerr << "ablate: unknown axis '" << opts.axis
              << "' (optimizer|epsilon|aggregation|m|cost_optimizer)\n";
    return kExitUsage;
  }

  const fs::path out_root =
      fs::path(resolve_out_dir(opts.out_dir)) / ("ablate_" + opts.axis);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& cell : cells) {
    TrainConfig cfg;
    try {
      auto overrides = opts.overrides;
      overrides.insert(overrides.end(), cell.overrides.begin(), cell.overrides.end());
      cfg = load_config(opts.config_path, overrides);
    } catch (const ConfigError& e) {
      std::cerr << e.what() << "\n";
      return kExitUsage;
    }
    const auto outcomes = run_seeds(cfg, out_root / cell.label, opts.parallel, true);
    double ret = 0.0, cost = 0.0, cvar = 0.0;
    long n = 0;
    for (const auto& o : outcomes) {
      if (!o.error.empty()) {
        std::cerr << "ablate cell " << cell.label << " seed " << o.seed
                  << " failed: " << o.error << "\n";
        return o.numerical_abort ? kExitNumerical : kExitUsage;
      }
      ret += o.summary.eval.mean_return;
      cost += o.summary.eval.mean_cost;
      cvar += o.summary.final_window_cvar;
      ++n;
    }
    table.push_back({{"cell", cell.label},
                     {"eval_return", ret / n},
                     {"eval_cost", cost / n},
                     {"window_cvar", cvar / n},
                     {"seeds", n}});
    if (!opts.quiet)
      std::printf("%-14s return=%9.3f cost=%8.3f window_cvar=%8.3f\n",
                  cell.label.c_str(), ret / n, cost / n, cvar / n);
  }
  fs::create_directories(out_root);
  std::ofstream out(out_root / "ablate_summary.json", std::ios::binary);
  out << table.dump(2) << "\n";
  return kExitOk;
}

int cmd_verify(const VerifyOptions& opts) {
  verify::SuiteOptions so;
  so.seed = opts.seed;
  so.inject_fault = opts.inject_fault;
  auto scale = [&](long base) {
    return std::max<long>(1, static_cast<long>(base * opts.scale));
  };
  so.cvar_bound_trials = scale(1000);
  so.comparison_trials = scale(10000);
  so.margin_trials = scale(1000);
  so.signal_trials = scale(10000);
  so.gpd_samples = scale(1000000);
  so.contraction_instances = static_cast<int>(scale(100));

  const auto suite = verify::run_suite(so);
  std::printf("%-36s %-6s %10s %10s %14s\n", "check", "status", "trials", "violations",
              "worst_slack");
  for (const auto& r : suite.reports) {
    std::printf("%-36s %-6s %10ld %10ld %14.3e\n", r.name.c_str(),
                r.passed ? "pass" : "FAIL", r.trials, r.violations, r.worst_slack);
  }
  if (!opts.report_path.empty()) {
    std::ofstream out(opts.report_path, std::ios::binary);
    if (!out) {
      std::cerr << "verify: cannot write report to " << opts.report_path << "\n";
      return kExitUsage;
    }
    out << suite.to_json() << "\n";
  }
  return suite.all_passed ? kExitOk : kExitVerifyFailed;
}

int cmd_plot(const PlotOptions& opts) {
  try {
    const auto curves = aggregate_metrics(opts.metrics_paths);
    if (curves.skipped_lines > 0)
      std::cerr << "plot: skipped " << curves.skipped_lines << " malformed lines\n";
    fs::path svg(opts.out_path);
    write_curves_svg(curves, opts.beta, svg.string());
    fs::path csv = svg;
    csv.replace_extension(".csv");
    write_curves_csv(curves, csv.string());
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "plot: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace slsac
