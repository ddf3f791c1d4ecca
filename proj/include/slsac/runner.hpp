#pragma once

#include <string>
#include <vector>

#include "slsac/config.hpp"

namespace slsac {

// CLI exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerifyFailed = 2;
inline constexpr int kExitNumerical = 3;

struct TrainOptions {
  std::string config_path;                // empty = defaults
  std::vector<std::string> overrides;     // key=value
  std::string out_dir;                    // resolved against SLSAC_OUT_DIR
  std::string run_name = "run";
  int parallel = 1;                       // seeds run in isolated workers
  bool quiet = false;
};

int cmd_train(const TrainOptions& opts);

struct EvalOptions {
  std::string run_dir;       // directory produced by cmd_train (per-seed)
  std::string checkpoint;    // alternative: explicit checkpoint + config
  std::string config_path;
  std::vector<std::string> overrides;
  int episodes = 30;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalOptions& opts);

struct AblateOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string axis;  // optimizer | epsilon | aggregation | m | cost_optimizer
  std::string out_dir;
  int parallel = 1;
  bool quiet = false;
};

int cmd_ablate(const AblateOptions& opts);

struct VerifyOptions {
  std::string report_path;  // empty = no file, print only
  std::uint64_t seed = 0;
  double scale = 1.0;       // trial-count multiplier for quick runs
  bool inject_fault = false;
};

int cmd_verify(const VerifyOptions& opts);

struct PlotOptions {
  std::vector<std::string> metrics_paths;
  std::string out_path;  // .svg; the csv lands next to it
  double beta = 25.0;
};

int cmd_plot(const PlotOptions& opts);

// Output root: --out flag if set, else $SLSAC_OUT_DIR, else "./runs".
std::string resolve_out_dir(const std::string& flag_value);

}  // namespace slsac
