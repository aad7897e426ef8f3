#include "epdkit/pipeline/split.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "epdkit/core/error.hpp"
#include "epdkit/core/rng.hpp"

namespace epd::pipeline {

namespace {

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

void assign(Manifest& m, std::vector<std::size_t> idx, double fraction, std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  shuffle(idx, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
  for (std::size_t k = 0; k < idx.size(); ++k) m.records[idx[k]].split = k < n_train ? Split::train : Split::val;
}

}  // namespace

SplitOutcome assign_split(Manifest& m, std::uint64_t seed, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw RangeError("train fraction must lie in (0, 1)");
  if (m.records.empty()) throw RangeError("cannot split an empty manifest");

  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    strata[{static_cast<int>(m.records[i].task), static_cast<int>(m.records[i].spec.kind)}].push_back(i);

  SplitOutcome out;
  out.info.seed = seed;
  out.info.train_fraction = fraction;
  for (const auto& [key, idx] : strata)
    if (idx.size() < kMinStratumSize) {
      const auto& r = m.records[idx.front()];
      out.warnings.push_back("stratum " + std::string(sim::task_name(r.task)) + "/" +
                             std::string(distort::kind_name(r.spec.kind)) + " has " + std::to_string(idx.size()) +
                             " records (fewer than " + std::to_string(kMinStratumSize) + "); using a global split");
      out.info.stratified = false;
      break;
    }

  if (out.info.stratified) {
    for (const auto& [key, idx] : strata)
      assign(m, idx, fraction, derive_seed(seed, static_cast<std::uint64_t>(key.first * 64 + key.second)));
  } else {
    std::vector<std::size_t> idx(m.records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    assign(m, idx, fraction, derive_seed(seed, 0xFFFF));
  }

  for (const auto& r : m.records) (r.split == Split::train ? out.train : out.val) += 1;
  out.info.hash = split_hash(m);
  m.split = out.info;
  return out;
}

std::string split_hash(const Manifest& m) {
  std::vector<std::pair<std::string, Split>> rows;
  for (const auto& r : m.records) rows.emplace_back(r.id, r.split);
  std::sort(rows.begin(), rows.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [id, split] : rows) {
    feed(id);
    feed("=");
    feed(split_name(split));
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace epd::pipeline
