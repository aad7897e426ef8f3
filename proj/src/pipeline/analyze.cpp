#include "epdkit/pipeline/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "epdkit/core/error.hpp"

namespace epd::pipeline {

namespace {

std::vector<std::string> kind_names(const Manifest& m) {
  std::vector<std::string> out;
  for (auto k : m.config.kinds) out.emplace_back(distort::kind_name(k));
  return out;
}

}  // namespace

metrics::GroupStats quality_stats(const Manifest& m) {
  std::vector<metrics::ScoredItem> items;
  for (const auto& r : m.records) items.push_back({std::string(distort::kind_name(r.spec.kind)), r.spec.level, r.dmos});
  return metrics::group_stats(items, kind_names(m), m.config.levels);
}

CsvTable quality_table(const metrics::GroupStats& stats, const std::vector<int>& levels) {
  CsvTable t;
  t.header = {"kind", "label"};
  for (int l : levels) {
    t.header.push_back("l" + std::to_string(l) + "_mean");
    t.header.push_back("l" + std::to_string(l) + "_std");
  }
  t.header.push_back("avg_mean");
  t.header.push_back("avg_std");
  for (const auto& avg : stats.averages) {
    std::vector<std::string> row{avg.group, std::string(distort::kind_info(distort::parse_kind(avg.group)).label)};
    for (int l : levels) {
      const auto it = std::find_if(stats.cells.begin(), stats.cells.end(),
                                   [&](const auto& c) { return c.group == avg.group && c.level == l; });
      row.push_back(it == stats.cells.end() ? "nan" : format_number(it->mean));
      row.push_back(it == stats.cells.end() ? "nan" : format_number(it->std));
    }
    row.push_back(format_number(avg.mean));
    row.push_back(format_number(avg.std));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable quality_extremes(const metrics::GroupStats& stats) {
  CsvTable t;
  t.header = {"column", "best", "worst"};
  for (const auto& [level, best] : stats.best) {
    const std::string col = level == 0 ? "avg" : "l" + std::to_string(level);
    t.rows.push_back({col, best, stats.worst.at(level)});
  }
  return t;
}

TaskCorrelation task_correlation(const Manifest& m) {
  using Key = std::tuple<int, distort::Kind, int>;
  std::map<Key, std::map<sim::Task, const EpdRecord*>> cells;
  for (const auto& r : m.records) cells[{r.scene, r.spec.kind, r.spec.level}][r.task] = &r;

  TaskCorrelation tc;
  tc.names.push_back("all");
  for (auto t : m.config.tasks) tc.names.emplace_back(sim::task_name(t));
  std::vector<std::vector<double>> cols(tc.names.size());
  for (const auto& [key, by_task] : cells) {
    if (by_task.size() != m.config.tasks.size()) continue;
    cols[0].push_back(by_task.begin()->second->all_dmos);
    for (std::size_t i = 0; i < m.config.tasks.size(); ++i) cols[i + 1].push_back(by_task.at(m.config.tasks[i])->dmos);
    ++tc.cells;
  }
  const std::size_t n = cols.size();
  tc.srcc.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = std::nan("");
      try {
        v = metrics::srcc(cols[i], cols[j]);
      } catch (const Error&) {
      }
      tc.srcc[i][j] = tc.srcc[j][i] = v;
    }
  return tc;
}

CsvTable task_correlation_table(const TaskCorrelation& tc) {
  CsvTable t;
  t.header = {"name"};
  t.header.insert(t.header.end(), tc.names.begin(), tc.names.end());
  for (std::size_t i = 0; i < tc.names.size(); ++i) {
    std::vector<std::string> row{tc.names[i]};
    for (double v : tc.srcc[i]) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable agent_category_table(const Manifest& m) {
  // norm[(task, agent)][record index]
  std::map<std::pair<sim::Task, sim::Agent>, std::vector<double>> norm;
  std::map<sim::Task, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < m.records.size(); ++i) by_task[m.records[i].task].push_back(i);
  CsvTable t;
  t.header = {"category", "label"};
  for (auto task : m.config.tasks)
    for (auto agent : sim::kAgents) {
      t.header.push_back(std::string(sim::task_name(task)) + "_" + std::string(sim::agent_name(agent)));
      auto& v = norm[{task, agent}];
      v.assign(m.records.size(), std::nan(""));
      const auto& idx = by_task[task];
      std::vector<double> raw;
      for (std::size_t i : idx) raw.push_back(m.records[i].agent_scores.get(agent));
      std::vector<double> scaled(raw.size(), std::nan(""));
      try {
        scaled = metrics::normalize_scores(raw);
      } catch (const RangeError&) {
      }
      for (std::size_t k = 0; k < idx.size(); ++k) v[idx[k]] = scaled[k];
    }

  for (int c = 0; c < distort::kCategoryCount; ++c) {
    const auto cat = static_cast<distort::Category>(c);
    std::vector<std::string> row{std::string(distort::category_code(cat)), std::string(distort::category_label(cat))};
    bool any = false;
    for (auto task : m.config.tasks)
      for (auto agent : sim::kAgents) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < m.records.size(); ++i) {
          const auto& r = m.records[i];
          if (r.task != task || distort::kind_info(r.spec.kind).category != cat) continue;
          sum += norm[{task, agent}][i];
          ++n;
        }
        any = any || n > 0;
        row.push_back(n ? format_number(sum / static_cast<double>(n)) : "nan");
      }
    if (any) t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable histogram_table(const Manifest& m) {
  CsvTable t;
  t.header = {"kind", "level", "n", "mean", "std", "min", "max", "bin_0_1", "bin_1_2", "bin_2_3", "bin_3_4", "bin_4_5"};
  for (auto kind : m.config.kinds)
    for (int level : m.config.levels) {
      std::vector<double> v;
      for (const auto& r : m.records)
        if (r.spec.kind == kind && r.spec.level == level) v.push_back(r.dmos);
      if (v.empty()) continue;
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size());
      std::array<int, 5> bins{};
      for (double x : v) bins[std::clamp(static_cast<int>(std::floor(x)), 0, 4)] += 1;
      std::vector<std::string> row{std::string(distort::kind_name(kind)), std::to_string(level),
                                   std::to_string(v.size()), format_number(mean), format_number(std::sqrt(var)),
                                   format_number(*std::min_element(v.begin(), v.end())),
                                   format_number(*std::max_element(v.begin(), v.end()))};
      for (int b : bins) row.push_back(std::to_string(b));
      t.rows.push_back(std::move(row));
    }
  return t;
}

std::vector<std::string> write_analysis(const Manifest& m, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const auto stats = quality_stats(m);
  write_csv(out_dir / "quality_table.csv", quality_table(stats, m.config.levels));
  write_csv(out_dir / "quality_extremes.csv", quality_extremes(stats));
  write_csv(out_dir / "task_correlation.csv", task_correlation_table(task_correlation(m)));
  write_csv(out_dir / "agent_category.csv", agent_category_table(m));
  write_csv(out_dir / "histogram.csv", histogram_table(m));
  return stats.warnings;
}

ExternalCorrelation correlate_external(const Manifest& m, const CsvTable& external, metrics::Mapping mapping) {
  const std::size_t id_col = external.column("id"), score_col = external.column("score");
  std::map<std::string, double> scores;
  for (std::size_t r = 0; r < external.rows.size(); ++r) {
    const auto& row = external.rows[r];
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(row[score_col], &used);
      if (used != row[score_col].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw FormatError("external score on row " + std::to_string(r + 2) + " is not a number: '" + row[score_col] + "'");
    }
    if (!std::isfinite(v)) throw FormatError("external score for '" + row[id_col] + "' is not finite");
    if (!scores.emplace(row[id_col], v).second) throw FormatError("duplicate external id '" + row[id_col] + "'");
  }

  ExternalCorrelation out;
  out.manifest_records = m.records.size();
  out.external_rows = external.rows.size();
  std::vector<double> x, y;
  for (const auto& r : m.records) {
    const auto it = scores.find(r.id);
    if (it == scores.end()) continue;
    out.scatter.push_back({r.id, it->second, r.dmos, 0.0});
    x.push_back(it->second);
    y.push_back(r.dmos);
  }
  out.matched = out.scatter.size();
  if (static_cast<double>(out.matched) < kMinExternalOverlap * static_cast<double>(out.manifest_records))
    throw RangeError("only " + std::to_string(out.matched) + " of " + std::to_string(out.manifest_records) +
                     " manifest records have external scores (at least 80% required)");
  out.report = metrics::correlate(x, y, mapping);

  if (mapping == metrics::Mapping::poly3) {
    const auto fit = metrics::fit_poly3(x, y);
    for (auto& row : out.scatter) row.fitted = fit(row.external);
  } else if (mapping == metrics::Mapping::logistic4) {
    const auto fit = metrics::fit_logistic4(x, y);
    for (auto& row : out.scatter) row.fitted = fit.curve(row.external);
  } else {
    for (auto& row : out.scatter) row.fitted = row.external;
  }
  return out;
}

CsvTable scatter_table(const ExternalCorrelation& result) {
  CsvTable t;
  t.header = {"id", "external", "dmos", "fitted"};
  for (const auto& r : result.scatter)
    t.rows.push_back({r.id, format_number(r.external), format_number(r.dmos), format_number(r.fitted)});
  return t;
}

}  // namespace epd::pipeline
