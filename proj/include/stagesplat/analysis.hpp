#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "stagesplat/curriculum.hpp"

namespace stagesplat {

struct SeriesPoint {
  long iter = 0;
  double value = 0.0;
};

/// Per-iteration mean of the trace records whose kind is listed. Records of
/// the translation pre-phase (negative iterations) are skipped.
std::vector<SeriesPoint> loss_series(const LossTrace& trace, std::initializer_list<LossKind> kinds);

/// Centered running median; the window shrinks at the ends.
std::vector<SeriesPoint> median_filter(std::span<const SeriesPoint> series, std::size_t window);

/// Points with begin <= iter < end.
std::vector<SeriesPoint> slice(std::span<const SeriesPoint> series, long begin, long end);

double mean_value(std::span<const SeriesPoint> series);
/// Least-squares slope of value against iteration.
double slope(std::span<const SeriesPoint> series);
/// Fitted change across the window divided by the window mean.
double relative_trend(std::span<const SeriesPoint> series);

struct TraceSummary {
  std::string label;
  double final_obj = 0.0, final_edge = 0.0, final_scene = 0.0;
  double trend_obj = 0.0, trend_edge = 0.0, trend_scene = 0.0;
};

/// Final values are means of the median-filtered series over the last 10%
/// of iterations; trends are relative_trend over the last 20%. Edge series
/// combine joint and targeted edge losses.
TraceSummary summarize(const LossTrace& trace, long total_iters, const std::string& label,
                       std::size_t median_window = 25);

std::string summary_table_csv(std::span<const TraceSummary> rows);

LossTrace parse_trace_csv(const std::string& text);

}  // namespace stagesplat
