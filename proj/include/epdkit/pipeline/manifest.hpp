#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epdkit/distort/catalog.hpp"
#include "epdkit/sim/episode.hpp"

namespace epd::pipeline {

inline constexpr int kManifestFormat = 1;

struct AgentScores {
  double ppo = 0.0;
  double sac = 0.0;
  double tdmpc2 = 0.0;

  double get(sim::Agent agent) const;
  double& at(sim::Agent agent);
  friend bool operator==(const AgentScores&, const AgentScores&) = default;
};

enum class Split { none, train, val };
std::string_view split_name(Split split);

struct EpdRecord {
  std::string id;  // "{task}_{scene}_{kind}_{level}"
  sim::Task task = sim::Task::push;
  int scene = 0;
  std::uint64_t scene_seed = 0;
  distort::DistortionSpec spec;
  std::string ref_path;   // relative to the manifest directory
  std::string dist_path;
  AgentScores agent_scores;  // raw episode returns
  double task_score = 0.0;   // mean of the per-agent normalized returns
  double dmos = 0.0;         // task_score normalized per task to [0, 5]
  double all_dmos = 0.0;     // push/pick mean for the (scene, kind, level) cell, normalized to [0, 5]
  Split split = Split::none;

  friend bool operator==(const EpdRecord&, const EpdRecord&) = default;
};

struct GenerationConfig {
  int scenes = 5;
  std::vector<sim::Task> tasks{sim::Task::push, sim::Task::pick};
  std::vector<distort::Kind> kinds;
  std::vector<int> levels{1, 2, 3, 4, 5};
  std::uint64_t seed = 0;
  sim::SimParams sim;
  sim::RewardParams reward;
};
bool operator==(const GenerationConfig& a, const GenerationConfig& b);

struct SplitInfo {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  bool stratified = true;
  std::string hash;

  friend bool operator==(const SplitInfo&, const SplitInfo&) = default;
};

struct Manifest {
  int format = kManifestFormat;
  GenerationConfig config;
  std::vector<EpdRecord> records;
  std::optional<SplitInfo> split;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string record_id(sim::Task task, int scene, distort::Kind kind, int level);

// Canonical JSON text; byte-identical for equal manifests.
std::string serialize(const Manifest& manifest);
// Throws FormatError on malformed input or a failed validate().
Manifest parse_manifest(const std::string& text);

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

// Unique ids, dmos inside [0, 5], finite scores. Throws FormatError.
void validate(const Manifest& manifest);

std::vector<const EpdRecord*> select(const Manifest& manifest, Split split);

}  // namespace epd::pipeline
