#include "epdkit/metrics/stats.hpp"

#include <algorithm>
#include <cmath>

#include "epdkit/core/error.hpp"

namespace epd::metrics {
namespace {

CellStats summarize(const std::string& group, int level, const std::vector<double>& values) {
  CellStats out{group, level, values.size(), 0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

void rank_column(const std::vector<CellStats>& cells, int level, GroupStats& out) {
  const CellStats* best = nullptr;
  const CellStats* worst = nullptr;
  for (const auto& c : cells) {
    if (c.level != level) continue;
    if (!best || c.mean > best->mean) best = &c;
    if (!worst || c.mean < worst->mean) worst = &c;
  }
  if (best) {
    out.best[level] = best->group;
    out.worst[level] = worst->group;
  }
}

}  // namespace

std::vector<double> normalize_scores(std::span<const double> raw, double lo, double hi) {
  if (raw.size() < 2) throw RangeError("normalization needs at least 2 scores");
  for (double v : raw)
    if (!std::isfinite(v)) throw RangeError("cannot normalize non-finite scores");
  const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
  if (*mx == *mn) throw RangeError("degenerate score spread: every score equals " + std::to_string(*mn));
  const double scale = (hi - lo) / (*mx - *mn);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == *mn)
      out[i] = lo;
    else if (raw[i] == *mx)
      out[i] = hi;
    else
      out[i] = std::clamp(lo + (raw[i] - *mn) * scale, lo, hi);
  }
  return out;
}

GroupStats group_stats(std::span<const ScoredItem> items, std::span<const std::string> groups,
                       std::span<const int> levels) {
  GroupStats out;
  for (const std::string& group : groups) {
    std::vector<double> all;
    for (int level : levels) {
      std::vector<double> values;
      for (const auto& item : items)
        if (item.group == group && item.level == level) values.push_back(item.score);
      if (values.empty()) {
        out.warnings.push_back("no scores for " + group + " level " + std::to_string(level));
        continue;
      }
      all.insert(all.end(), values.begin(), values.end());
      out.cells.push_back(summarize(group, level, values));
    }
    if (!all.empty()) out.averages.push_back(summarize(group, 0, all));
  }
  for (int level : levels) rank_column(out.cells, level, out);
  rank_column(out.averages, 0, out);
  return out;
}

}  // namespace epd::metrics
