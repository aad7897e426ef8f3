#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epdkit/metrics/correlation.hpp"
#include "epdkit/net/maeiqa.hpp"
#include "epdkit/pipeline/csv.hpp"
#include "epdkit/pipeline/manifest.hpp"

namespace epd::pipeline {

// Infinite PSNR values (identical images) enter correlations as this value.
inline constexpr double kPsnrCap = 100.0;

// A quality predictor over manifest records; higher means better quality.
struct Scorer {
  std::string name;
  std::size_t params = 0;
  std::function<std::vector<double>(const std::vector<const EpdRecord*>&, const std::filesystem::path& root)> score;
};

Scorer psnr_scorer();
Scorer ssim_scorer();
Scorer dmos_scorer();  // returns the ground truth itself
// The ground truth of the evaluated records in a seeded random order.
Scorer permutation_scorer(std::uint64_t seed);
Scorer model_scorer(std::shared_ptr<const net::Maeiqa<float>> model, std::string name = "ma-eiqa");

enum class Subset { all, push, pick };
inline constexpr Subset kSubsets[] = {Subset::all, Subset::push, Subset::pick};
std::string_view subset_name(Subset subset);
Subset parse_subset(std::string_view name);  // RangeError

struct SubsetResult {
  Subset subset = Subset::all;
  std::size_t n = 0;
  std::optional<metrics::CorrelationReport> report;  // empty when undefined
  std::string note;                                  // why the report is empty
};

struct EvalResult {
  std::string scorer;
  std::size_t params = 0;
  metrics::Mapping mapping = metrics::Mapping::none;
  std::vector<SubsetResult> subsets;
  std::vector<const EpdRecord*> records;  // evaluated records, manifest order
  std::vector<double> scores;             // scorer output per record
};

// Scores the records of `split` (every record when the manifest has no split
// or split is Split::none) and correlates against dmos on each subset. All
// is the union of Push and Pick.
EvalResult evaluate(const Manifest& manifest, const std::filesystem::path& root, const Scorer& scorer,
                    metrics::Mapping mapping, Split split = Split::val,
                    const std::vector<Subset>& subsets = {Subset::all, Subset::push, Subset::pick});

// One row per result: scorer, params, mapping, then n/srcc/krcc/plcc per
// subset in the order all, push, pick. Undefined cells hold "nan".
CsvTable eval_table(const std::vector<EvalResult>& results);
// id, task, kind, level, dmos, score for every evaluated record.
CsvTable scores_table(const EvalResult& result);

struct PermutationBand {
  double srcc = 0.0;  // quantile of |SRCC| between shuffled and true scores
  double krcc = 0.0;
  double plcc = 0.0;
  std::size_t permutations = 0;
  double quantile = 0.0;
};

// Null distribution of the three coefficients for a scorer unrelated to the
// truth, from `permutations` seeded shuffles of `truth`.
PermutationBand permutation_band(const std::vector<double>& truth, std::size_t permutations, double quantile,
                                 std::uint64_t seed, metrics::Mapping mapping = metrics::Mapping::none);

}  // namespace epd::pipeline
