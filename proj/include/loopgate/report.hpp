#pragma once

// Metric CSV tables and the SVG precision-recall plot.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "loopgate/evaluation.hpp"
#include "loopgate/io/text.hpp"

namespace loopgate::report {

using MetricRows = std::vector<std::pair<std::string, std::string>>;

inline std::string metrics_csv(const MetricRows& rows) {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : rows) out += k + ',' + v + '\n';
  return out;
}

/// AP and MR as two-decimal percentages.
inline MetricRows classification_rows(std::span<const eval::ScoredLabel> items) {
  return {{"AP", eval::format_percent(eval::average_precision(items))},
          {"MR", eval::format_percent(eval::max_recall_at_full_precision(items))}};
}

/// `ATE`, then one row per checkpoint `t0..t{k-1}`, then `tATE`.
inline MetricRows trajectory_rows(double ate, const eval::TemporalAte& t) {
  MetricRows rows{{"ATE", io::format_sig(ate)}};
  for (std::size_t i = 0; i < t.checkpoint_ate.size(); ++i) {
    rows.emplace_back("t" + std::to_string(i), io::format_sig(t.checkpoint_ate[i]));
  }
  rows.emplace_back("tATE", io::format_sig(t.tate));
  return rows;
}

/// Checkpoint columns in a single row: `t0,...,t{k-1},tATE`.
inline std::string tate_table_csv(const eval::TemporalAte& t) {
  std::string head, vals;
  for (std::size_t i = 0; i < t.checkpoint_ate.size(); ++i) {
    head += "t" + std::to_string(i) + ',';
    vals += io::format_sig(t.checkpoint_ate[i]) + ',';
  }
  return head + "tATE\n" + vals + io::format_sig(t.tate) + '\n';
}

inline std::string pr_curve_csv(const std::vector<eval::PrPoint>& curve) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : curve) {
    out += io::format_exact(p.threshold) + ',' + io::format_exact(p.precision) + ',' +
           io::format_exact(p.recall) + '\n';
  }
  return out;
}

struct PrSeries {
  std::string name;
  std::vector<eval::PrPoint> curve;
};

/// Static SVG: recall on x, precision on y, both 0..1, one polyline per series.
inline std::string pr_curves_svg(const std::vector<PrSeries>& series, const std::string& title = "Precision-Recall") {
  constexpr double W = 560, H = 460, left = 60, top = 40, plot = 360;
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  auto fmt = [](double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.2f", v);
    return std::string(b);
  };
  auto px = [&](double r) { return left + r * plot; };
  auto py = [&](double p) { return top + (1.0 - p) * plot; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(left + plot / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + title +
       "</text>\n";
  s += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(plot) + "\" height=\"" + fmt(plot) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    s += "<line x1=\"" + fmt(px(v)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(v)) + "\" y2=\"" +
         fmt(py(0) + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(px(v)) + "\" y=\"" + fmt(py(0) + 18) + "\" text-anchor=\"middle\">" + fmt(v) + "</text>\n";
    s += "<line x1=\"" + fmt(px(0) - 5) + "\" y1=\"" + fmt(py(v)) + "\" x2=\"" + fmt(px(0)) + "\" y2=\"" +
         fmt(py(v)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(px(0) - 8) + "\" y=\"" + fmt(py(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
  }
  s += "<text x=\"" + fmt(left + plot / 2) + "\" y=\"" + fmt(top + plot + 36) +
       "\" text-anchor=\"middle\">Recall</text>\n";
  s += "<text x=\"16\" y=\"" + fmt(top + plot / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fmt(top + plot / 2) + ")\">Precision</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = colors[k % std::size(colors)];
    std::string pts;
    if (!series[k].curve.empty()) pts += fmt(px(0)) + ',' + fmt(py(series[k].curve.front().precision));
    for (const auto& p : series[k].curve) pts += ' ' + fmt(px(p.recall)) + ',' + fmt(py(p.precision));
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(k);
    s += "<line x1=\"" + fmt(left + plot + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(left + plot + 36) +
         "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt(left + plot + 40) + "\" y=\"" + fmt(ly) + "\">" + series[k].name + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace loopgate::report
