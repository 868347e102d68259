#include "stagesplat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "stagesplat/error.hpp"

namespace stagesplat {

std::vector<SeriesPoint> loss_series(const LossTrace& trace, std::initializer_list<LossKind> kinds) {
  std::map<long, std::pair<double, long>> acc;
  for (const auto& r : trace) {
    if (r.iter < 0 || std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) continue;
    auto& a = acc[r.iter];
    a.first += r.value;
    ++a.second;
  }
  std::vector<SeriesPoint> out;
  out.reserve(acc.size());
  for (const auto& [it, a] : acc) out.push_back({it, a.first / static_cast<double>(a.second)});
  return out;
}

std::vector<SeriesPoint> median_filter(std::span<const SeriesPoint> series, std::size_t window) {
  std::vector<SeriesPoint> out(series.begin(), series.end());
  const std::size_t half = window / 2;
  std::vector<double> buf;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0, hi = std::min(series.size(), i + half + 1);
    buf.clear();
    for (std::size_t k = lo; k < hi; ++k) buf.push_back(series[k].value);
    std::sort(buf.begin(), buf.end());
    const std::size_t m = buf.size();
    out[i].value = m % 2 ? buf[m / 2] : 0.5 * (buf[m / 2 - 1] + buf[m / 2]);
  }
  return out;
}

std::vector<SeriesPoint> slice(std::span<const SeriesPoint> series, long begin, long end) {
  std::vector<SeriesPoint> out;
  for (const auto& p : series)
    if (p.iter >= begin && p.iter < end) out.push_back(p);
  return out;
}

double mean_value(std::span<const SeriesPoint> series) {
  if (series.empty()) return 0.0;
  double s = 0;
  for (const auto& p : series) s += p.value;
  return s / static_cast<double>(series.size());
}

double slope(std::span<const SeriesPoint> series) {
  if (series.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (const auto& p : series) {
    mx += static_cast<double>(p.iter);
    my += p.value;
  }
  mx /= static_cast<double>(series.size());
  my /= static_cast<double>(series.size());
  double sxy = 0, sxx = 0;
  for (const auto& p : series) {
    const double dx = static_cast<double>(p.iter) - mx;
    sxy += dx * (p.value - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

double relative_trend(std::span<const SeriesPoint> series) {
  if (series.size() < 2) return 0.0;
  const double m = mean_value(series);
  if (std::abs(m) < 1e-300) return 0.0;
  return slope(series) * static_cast<double>(series.back().iter - series.front().iter) / m;
}

TraceSummary summarize(const LossTrace& trace, long total_iters, const std::string& label, std::size_t median_window) {
  TraceSummary s;
  s.label = label;
  const long tail10 = total_iters - std::max<long>(1, total_iters / 10);
  const long tail20 = total_iters - std::max<long>(2, total_iters / 5);
  auto fill = [&](std::initializer_list<LossKind> kinds, double& final_value, double& trend) {
    const auto f = median_filter(loss_series(trace, kinds), median_window);
    final_value = mean_value(slice(f, tail10, total_iters));
    trend = relative_trend(slice(f, tail20, total_iters));
  };
  fill({LossKind::Object}, s.final_obj, s.trend_obj);
  fill({LossKind::Edge, LossKind::Target}, s.final_edge, s.trend_edge);
  fill({LossKind::Scene}, s.final_scene, s.trend_scene);
  return s;
}

std::string summary_table_csv(std::span<const TraceSummary> rows) {
  std::string out = "heuristic,final_obj,final_edge,final_scene,trend_obj,trend_edge,trend_scene\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.label.c_str(), r.final_obj, r.final_edge,
                  r.final_scene, r.trend_obj, r.trend_edge, r.trend_scene);
    out += buf;
  }
  return out;
}

LossTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "iter,stage,kind,subject,value") throw ParseError("unexpected trace header");
  LossTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 5) throw ParseError("malformed trace row: " + line);
    LossTraceRecord r;
    r.iter = std::stol(f[0]);
    r.stage = std::stoi(f[1]);
    bool known = false;
    for (LossKind k : {LossKind::Object, LossKind::Edge, LossKind::Scene, LossKind::Target, LossKind::Spatial})
      if (to_string(k) == f[2]) {
        r.kind = k;
        known = true;
      }
    if (!known) throw ParseError("unknown loss kind '" + f[2] + "'");
    r.subject = f[3];
    r.value = std::stod(f[4]);
    trace.push_back(std::move(r));
  }
  return trace;
}

}  // namespace stagesplat
