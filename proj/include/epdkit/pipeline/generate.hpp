#pragma once

#include <filesystem>
#include <vector>

#include "epdkit/pipeline/manifest.hpp"

namespace epd::pipeline {

// Every catalog kind in catalog order.
std::vector<distort::Kind> all_kinds();

// Throws RangeError for empty task/kind/level lists, duplicates, levels
// outside 1..5, fewer than one scene, or invalid sim/reward parameters.
void validate(const GenerationConfig& config);

// Per-cell seeds. Scenes are shared between tasks and the distortion seed is
// shared by the push and pick records of one (scene, kind, level) cell.
std::uint64_t scene_seed(std::uint64_t master, int scene);
std::uint64_t distortion_seed(std::uint64_t master, int scene, distort::Kind kind, int level);
std::uint64_t policy_seed(std::uint64_t master, sim::Task task, int scene, distort::Kind kind, int level);

// Fills task_score, dmos and all_dmos from the raw agent scores:
//   1. each agent's returns are min-max normalized to [0, 5] within a task;
//   2. task_score is the mean of the three normalized returns;
//   3. dmos is task_score min-max normalized to [0, 5] within the task;
//   4. all_dmos averages the push and pick dmos of one (scene, kind, level)
//      cell and normalizes those means to [0, 5] over all cells.
// Every stored value is rounded to 1e-6. Throws RangeError naming the task
// and agent when a group's scores have no spread.
void assign_labels(std::vector<EpdRecord>& records);

// Runs the three agents on every (task, scene, kind, level) cell and writes
// ref/<id>.png, dist/<id>.png and manifest.json under `out_dir`. Cells run in
// parallel; the output does not depend on the thread count. On failure every
// file written so far is removed before the error propagates.
Manifest generate(const GenerationConfig& config, const std::filesystem::path& out_dir);

}  // namespace epd::pipeline
