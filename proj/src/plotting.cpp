#include "slsac/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace slsac {

AggregatedCurves aggregate_metrics(const std::vector<std::string>& jsonl_paths) {
  if (jsonl_paths.empty())
    throw std::invalid_argument("plot: need at least one metrics file");
  std::map<long, std::vector<double>> returns, costs;
  long skipped = 0;
  for (const auto& path : jsonl_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("plot: cannot read metrics file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, /*throw=*/false);
      if (j.is_discarded() || !j.contains("event") || !j.contains("step")) {
        ++skipped;
        continue;
      }
      if (j["event"] != "episode") continue;
      const long step = j["step"].get<long>();
      returns[step].push_back(j.value("episode_return", 0.0));
      costs[step].push_back(j.value("episode_cost", 0.0));
    }
  }

  auto summarize = [](const std::map<long, std::vector<double>>& by_step) {
    std::vector<SeriesPoint> out;
    for (const auto& [step, vals] : by_step) {
      SeriesPoint p;
      p.step = step;
      for (double v : vals) p.mean += v;
      p.mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - p.mean) * (v - p.mean);
      p.stddev = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size())) : 0.0;
      out.push_back(p);
    }
    return out;
  };

  AggregatedCurves curves;
  curves.episode_return = summarize(returns);
  curves.episode_cost = summarize(costs);
  curves.skipped_lines = skipped;
  return curves;
}

void write_curves_csv(const AggregatedCurves& curves, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("plot: cannot write " + path);
  out << "step,return_mean,return_std,cost_mean,cost_std\n";
  char buf[160];
  for (std::size_t i = 0; i < curves.episode_return.size(); ++i) {
    const auto& r = curves.episode_return[i];
    const auto& c = i < curves.episode_cost.size() ? curves.episode_cost[i] : SeriesPoint{};
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g\n", r.step, r.mean,
                  r.stddev, c.mean, c.stddev);
    out << buf;
  }
}

namespace {

struct Panel {
  double x0, y0, w, h;          // plot area in svg coordinates
  long step_min, step_max;
  double v_min, v_max;

  double px(long step) const {
    if (step_max == step_min) return x0 + w / 2;
    return x0 + w * static_cast<double>(step - step_min) /
                    static_cast<double>(step_max - step_min);
  }
  double py(double v) const {
    if (v_max == v_min) return y0 + h / 2;
    return y0 + h * (1.0 - (v - v_min) / (v_max - v_min));
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void draw_series(std::ostream& out, const Panel& p, const std::vector<SeriesPoint>& s,
                 const std::string& color) {
  if (s.empty()) return;
  // stddev band
  std::ostringstream band;
  band << "<path fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" d=\"M";
  for (const auto& pt : s)
    band << fmt(p.px(pt.step)) << "," << fmt(p.py(pt.mean + pt.stddev)) << " L";
  for (auto it = s.rbegin(); it != s.rend(); ++it)
    band << fmt(p.px(it->step)) << "," << fmt(p.py(it->mean - it->stddev)) << " L";
  std::string d = band.str();
  d.pop_back();  // trailing 'L'
  d.pop_back();
  out << d << "Z\"/>\n";
  // mean line
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& pt : s) out << fmt(p.px(pt.step)) << "," << fmt(p.py(pt.mean)) << " ";
  out << "\"/>\n";
}

void draw_panel(std::ostream& out, Panel& p, const std::vector<SeriesPoint>& s,
                const std::string& title, const std::string& color, double dashed_at,
                bool with_dashed) {
  p.step_min = s.empty() ? 0 : s.front().step;
  p.step_max = s.empty() ? 1 : s.back().step;
  double lo = 0.0, hi = 1.0;
  if (!s.empty()) {
    lo = s.front().mean - s.front().stddev;
    hi = s.front().mean + s.front().stddev;
    for (const auto& pt : s) {
      lo = std::min(lo, pt.mean - pt.stddev);
      hi = std::max(hi, pt.mean + pt.stddev);
    }
  }
  if (with_dashed) {
    lo = std::min(lo, dashed_at);
    hi = std::max(hi, dashed_at);
  }
  const double pad = (hi - lo) * 0.08 + 1e-12;
  p.v_min = lo - pad;
  p.v_max = hi + pad;

  out << "<rect x=\"" << fmt(p.x0) << "\" y=\"" << fmt(p.y0) << "\" width=\"" << fmt(p.w)
      << "\" height=\"" << fmt(p.h)
      << "\" fill=\"white\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << fmt(p.x0 + p.w / 2) << "\" y=\"" << fmt(p.y0 - 8)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << title
      << "</text>\n";
  // y ticks
  for (int k = 0; k <= 4; ++k) {
    const double v = p.v_min + (p.v_max - p.v_min) * k / 4.0;
    out << "<text x=\"" << fmt(p.x0 - 6) << "\" y=\"" << fmt(p.py(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(v)
        << "</text>\n";
  }
  // x ticks
  for (int k = 0; k <= 4; ++k) {
    const long sstep =
        p.step_min + static_cast<long>((p.step_max - p.step_min) * (k / 4.0));
    out << "<text x=\"" << fmt(p.px(sstep)) << "\" y=\"" << fmt(p.y0 + p.h + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << sstep
        << "</text>\n";
  }
  draw_series(out, p, s, color);
  if (with_dashed) {
    out << "<line x1=\"" << fmt(p.x0) << "\" y1=\"" << fmt(p.py(dashed_at)) << "\" x2=\""
        << fmt(p.x0 + p.w) << "\" y2=\"" << fmt(p.py(dashed_at))
        << "\" stroke=\"#333\" stroke-width=\"1.2\" stroke-dasharray=\"6,4\"/>\n";
  }
}

}  // namespace

void write_curves_svg(const AggregatedCurves& curves, double beta,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("plot: cannot write " + path);
  const double W = 900, H = 320;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  Panel left{70, 40, 340, 230, 0, 1, 0, 1};
  Panel right{520, 40, 340, 230, 0, 1, 0, 1};
  draw_panel(out, left, curves.episode_return, "Episode return", "#1f77b4", 0.0, false);
  draw_panel(out, right, curves.episode_cost, "Episode cost", "#d62728", beta, true);
  out << "<text x=\"" << fmt(left.x0 + left.w / 2) << "\" y=\"" << fmt(H - 6)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">steps"
      << "</text>\n";
  out << "<text x=\"" << fmt(right.x0 + right.w / 2) << "\" y=\"" << fmt(H - 6)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">steps"
      << "</text>\n";
  out << "</svg>\n";
}

}  // namespace slsac
