#include "epdkit/pipeline/generate.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "epdkit/core/error.hpp"
#include "epdkit/core/parallel.hpp"
#include "epdkit/core/rng.hpp"
#include "epdkit/metrics/stats.hpp"
#include "epdkit/pipeline/canonical_json.hpp"

namespace epd::pipeline {

namespace fs = std::filesystem;

std::vector<distort::Kind> all_kinds() {
  std::vector<distort::Kind> out;
  for (const auto& info : distort::list_kinds()) out.push_back(info.kind);
  return out;
}

void validate(const GenerationConfig& c) {
  if (c.scenes < 1) throw RangeError("at least one scene is required");
  if (c.tasks.empty()) throw RangeError("at least one task is required");
  if (c.kinds.empty()) throw RangeError("at least one distortion kind is required");
  if (c.levels.empty()) throw RangeError("at least one level is required");
  if (std::set(c.tasks.begin(), c.tasks.end()).size() != c.tasks.size()) throw RangeError("duplicate task");
  if (std::set(c.kinds.begin(), c.kinds.end()).size() != c.kinds.size()) throw RangeError("duplicate kind");
  if (std::set(c.levels.begin(), c.levels.end()).size() != c.levels.size()) throw RangeError("duplicate level");
  for (int l : c.levels)
    if (l < 1 || l > distort::kLevelCount) throw RangeError("level " + std::to_string(l) + " outside 1..5");
  sim::validate(c.reward);
  const auto& s = c.sim;
  if (!(s.a_max > 0 && s.sigma_min >= 0 && s.sigma_max >= s.sigma_min && s.capture_radius > 0 && s.tau_c > 0))
    throw RangeError("invalid simulator parameters");
}

std::uint64_t scene_seed(std::uint64_t master, int scene) {
  return derive_seed(derive_seed(master, 1), static_cast<std::uint64_t>(scene));
}

std::uint64_t distortion_seed(std::uint64_t master, int scene, distort::Kind kind, int level) {
  const std::uint64_t cell = static_cast<std::uint64_t>(kind) * 8 + static_cast<std::uint64_t>(level);
  return derive_seed(derive_seed(derive_seed(master, 2), static_cast<std::uint64_t>(scene)), cell);
}

std::uint64_t policy_seed(std::uint64_t master, sim::Task task, int scene, distort::Kind kind, int level) {
  return derive_seed(distortion_seed(derive_seed(master, 3), scene, kind, level), static_cast<std::uint64_t>(task));
}

namespace {

std::vector<double> normalized(const std::vector<double>& raw, const std::string& what) {
  try {
    return metrics::normalize_scores(raw);
  } catch (const RangeError&) {
    std::ostringstream os;
    os << "degenerate score spread for " << what << ": " << raw.size() << " values";
    if (!raw.empty()) os << ", all equal to " << raw.front();
    throw RangeError(os.str());
  }
}

}  // namespace

void assign_labels(std::vector<EpdRecord>& records) {
  std::map<sim::Task, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < records.size(); ++i) by_task[records[i].task].push_back(i);

  for (const auto& [task, idx] : by_task) {
    std::vector<double> mean(idx.size(), 0.0);
    for (sim::Agent agent : sim::kAgents) {
      std::vector<double> raw;
      for (std::size_t i : idx) raw.push_back(records[i].agent_scores.get(agent));
      const auto norm =
          normalized(raw, "task " + std::string(sim::task_name(task)) + ", agent " + std::string(sim::agent_name(agent)));
      for (std::size_t k = 0; k < idx.size(); ++k) mean[k] += norm[k] / 3.0;
    }
    std::vector<double> task_scores;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      records[idx[k]].task_score = round6(mean[k]);
      task_scores.push_back(records[idx[k]].task_score);
    }
    const auto dmos = normalized(task_scores, "task " + std::string(sim::task_name(task)));
    for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]].dmos = round6(dmos[k]);
  }

  if (by_task.size() < 2) {
    for (auto& r : records) r.all_dmos = r.dmos;
    return;
  }
  std::map<std::tuple<int, distort::Kind, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < records.size(); ++i)
    cells[{records[i].scene, records[i].spec.kind, records[i].spec.level}].push_back(i);
  std::vector<double> cell_mean;
  for (const auto& [key, idx] : cells) {
    double s = 0.0;
    for (std::size_t i : idx) s += records[i].dmos;
    cell_mean.push_back(s / static_cast<double>(idx.size()));
  }
  const auto all = normalized(cell_mean, "pooled tasks");
  std::size_t c = 0;
  for (const auto& [key, idx] : cells) {
    for (std::size_t i : idx) records[i].all_dmos = round6(all[c]);
    ++c;
  }
}

Manifest generate(const GenerationConfig& config, const fs::path& out_dir) {
  validate(config);

  Manifest m;
  m.config = config;
  for (sim::Task task : config.tasks)
    for (int scene = 0; scene < config.scenes; ++scene)
      for (distort::Kind kind : config.kinds)
        for (int level : config.levels) {
          EpdRecord r;
          r.id = record_id(task, scene, kind, level);
          r.task = task;
          r.scene = scene;
          r.scene_seed = scene_seed(config.seed, scene);
          r.spec = {kind, level, distortion_seed(config.seed, scene, kind, level)};
          r.ref_path = "ref/" + r.id + ".png";
          r.dist_path = "dist/" + r.id + ".png";
          m.records.push_back(std::move(r));
        }

  std::error_code ec;
  fs::create_directories(out_dir / "ref", ec);
  if (!ec) fs::create_directories(out_dir / "dist", ec);
  if (ec) throw IoError("cannot create output directories under " + out_dir.string() + ": " + ec.message());

  const auto cleanup = [&] {
    std::error_code ignore;
    for (const auto& r : m.records) {
      fs::remove(out_dir / r.ref_path, ignore);
      fs::remove(out_dir / r.dist_path, ignore);
    }
    fs::remove(out_dir / "manifest.json", ignore);
    fs::remove(out_dir / "ref", ignore);  // only succeeds when empty
    fs::remove(out_dir / "dist", ignore);
  };

  try {
    parallel_for(m.records.size(), [&](std::size_t i) {
      EpdRecord& r = m.records[i];
      const sim::Scene scene = sim::make_scene(r.scene_seed);
      const std::uint64_t pseed = policy_seed(config.seed, r.task, r.scene, r.spec.kind, r.spec.level);
      for (sim::Agent agent : sim::kAgents) {
        const sim::EpisodeResult ep = sim::run_episode(scene, r.task, r.spec, config.sim, config.reward, agent, pseed);
        r.agent_scores.at(agent) = round6(ep.score());
        if (agent == sim::Agent::ppo) {
          write_png(ep.reference_image, out_dir / r.ref_path);
          write_png(ep.evaluated_image, out_dir / r.dist_path);
        }
      }
    });
    assign_labels(m.records);
    validate(m);
    save_manifest(m, out_dir / "manifest.json");
  } catch (...) {
    cleanup();
    throw;
  }
  return m;
}

}  // namespace epd::pipeline
