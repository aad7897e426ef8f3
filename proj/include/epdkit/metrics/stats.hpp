#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace epd::metrics {

// Min-max affine map onto [lo, hi]; the minimum lands exactly on lo and the
// maximum exactly on hi. Throws RangeError for fewer than 2 values or when
// all values are equal.
std::vector<double> normalize_scores(std::span<const double> raw, double lo = 0.0, double hi = 5.0);

struct ScoredItem {
  std::string group;  // e.g. distortion kind
  int level = 0;
  double score = 0.0;
};

struct CellStats {
  std::string group;
  int level = 0;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
};

struct GroupStats {
  std::vector<CellStats> cells;     // one per (group, level) present, in request order
  std::vector<CellStats> averages;  // per group over all of its levels; level = 0
  // Per level (0 = the average column): groups with the highest and lowest mean.
  std::map<int, std::string> best;
  std::map<int, std::string> worst;
  std::vector<std::string> warnings;  // requested cells that had no data
};

// Mean and population standard deviation per (group, level) and per group.
// `groups` and `levels` fix the output order; items outside them are ignored
// and requested cells without data are omitted with a warning.
GroupStats group_stats(std::span<const ScoredItem> items, std::span<const std::string> groups,
                       std::span<const int> levels);

}  // namespace epd::metrics
