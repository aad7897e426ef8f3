#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epdkit/metrics/correlation.hpp"
#include "epdkit/metrics/stats.hpp"
#include "epdkit/pipeline/csv.hpp"
#include "epdkit/pipeline/manifest.hpp"

namespace epd::pipeline {

// Mean and spread of dmos per (kind, level) over every record, with best and
// worst kinds per column.
metrics::GroupStats quality_stats(const Manifest& manifest);
// kind, label, then mean/std per configured level, then avg_mean/avg_std.
CsvTable quality_table(const metrics::GroupStats& stats, const std::vector<int>& levels);
// column, best, worst.
CsvTable quality_extremes(const metrics::GroupStats& stats);

// SRCC between the pooled score and each task's dmos over the (scene, kind,
// level) cells present in every task. names[0] is "all".
struct TaskCorrelation {
  std::vector<std::string> names;
  std::vector<std::vector<double>> srcc;
  std::size_t cells = 0;
};
TaskCorrelation task_correlation(const Manifest& manifest);
CsvTable task_correlation_table(const TaskCorrelation& tc);

// Mean per-agent normalized return ([0, 5] within task) per distortion
// category, one column per (task, agent) pair.
CsvTable agent_category_table(const Manifest& manifest);

// Per (kind, level): n, mean, std, min, max and counts in five unit bins over [0, 5].
CsvTable histogram_table(const Manifest& manifest);

// Writes quality_table.csv, quality_extremes.csv, task_correlation.csv,
// agent_category.csv and histogram.csv. Returns warnings from missing cells.
std::vector<std::string> write_analysis(const Manifest& manifest, const std::filesystem::path& out_dir);

struct ScatterRow {
  std::string id;
  double external = 0.0;
  double dmos = 0.0;
  double fitted = 0.0;  // external mapped onto the dmos scale
};

struct ExternalCorrelation {
  std::size_t manifest_records = 0;
  std::size_t external_rows = 0;
  std::size_t matched = 0;
  metrics::CorrelationReport report;
  std::vector<ScatterRow> scatter;  // manifest order
};

inline constexpr double kMinExternalOverlap = 0.8;

// Correlates an external "id,score" CSV against manifest dmos. Throws
// FormatError for a malformed CSV or duplicate ids, and RangeError when fewer
// than 80% of manifest records have an external score.
ExternalCorrelation correlate_external(const Manifest& manifest, const CsvTable& external,
                                       metrics::Mapping mapping = metrics::Mapping::poly3);
CsvTable scatter_table(const ExternalCorrelation& result);

}  // namespace epd::pipeline
