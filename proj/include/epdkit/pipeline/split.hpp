#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epdkit/pipeline/manifest.hpp"

namespace epd::pipeline {

inline constexpr std::size_t kMinStratumSize = 5;

struct SplitOutcome {
  SplitInfo info;
  std::size_t train = 0;
  std::size_t val = 0;
  std::vector<std::string> warnings;
};

// Assigns every record to train or val in place. Records are stratified by
// (task, kind) and each stratum is shuffled with its own seeded stream, the
// first round(fraction * n) going to train. When any stratum has fewer than
// kMinStratumSize records the whole manifest is split globally instead and a
// warning says so. Throws RangeError for a fraction outside (0, 1) or an
// empty manifest.
SplitOutcome assign_split(Manifest& manifest, std::uint64_t seed, double train_fraction = 0.8);

// FNV-1a 64 over "id=split" lines sorted by id, as 16 hex digits. Equal
// hashes mean identical assignments.
std::string split_hash(const Manifest& manifest);

}  // namespace epd::pipeline
