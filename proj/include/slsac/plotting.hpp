#pragma once

#include <string>
#include <vector>

namespace slsac {

struct SeriesPoint {
  long step = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AggregatedCurves {
  std::vector<SeriesPoint> episode_return;
  std::vector<SeriesPoint> episode_cost;
  long skipped_lines = 0;  // malformed metrics lines
};

// Multi-seed aggregation of "episode" records, grouped by exact step.
AggregatedCurves aggregate_metrics(const std::vector<std::string>& jsonl_paths);

void write_curves_csv(const AggregatedCurves& curves, const std::string& path);

// Return and cost panels, mean line with +-1 stddev band and a dashed line
// at the cost limit.
void write_curves_svg(const AggregatedCurves& curves, double beta,
                      const std::string& path);

}  // namespace slsac
