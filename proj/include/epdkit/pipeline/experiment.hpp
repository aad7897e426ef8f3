#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epdkit/autodiff/optim.hpp"
#include "epdkit/net/config.hpp"
#include "epdkit/net/maeiqa.hpp"
#include "epdkit/net/train.hpp"
#include "epdkit/pipeline/csv.hpp"
#include "epdkit/pipeline/evaluate.hpp"
#include "epdkit/pipeline/manifest.hpp"

namespace epd::pipeline {

// Synthetic set whose dmos is set by distortion severity rather than by agent
// returns: sample i renders its own scene, applies kinds[i % K] at level
// levels[(i / K) % L], and is labelled 4.5 * (5 - level) / 4 + U(0, 0.5). Writes
// PNGs and a manifest (push task, agent scores zero) under `out_dir`, split
// with assign_split(seed).
struct SeveritySetConfig {
  std::size_t samples = 900;
  std::vector<distort::Kind> kinds{distort::Kind::white_noise, distort::Kind::color_noise,
                                   distort::Kind::impulse_noise, distort::Kind::multiplicative_noise,
                                   distort::Kind::gaussian_blur, distort::Kind::lens_blur};
  std::vector<int> levels{1, 2, 3, 4, 5};
  std::uint64_t seed = 0;
};
Manifest make_severity_set(const SeveritySetConfig& config, const std::filesystem::path& out_dir);

// Distorted images of `split` with their dmos as regression targets.
std::vector<net::Sample> load_samples(const Manifest& manifest, const std::filesystem::path& root, Split split);

struct TrainOptions {
  net::Preset preset = net::Preset::toy;
  bool enable_ms = true;
  bool enable_ea = true;
  std::optional<int> fc_hidden;
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;  // initialization and shuffling both derive from it

  net::ModelConfig model_config() const;
};

struct TrainRun {
  net::Maeiqa<float> model;
  ad::Optimizer<float> optimizer;
  std::vector<net::EpochStats> curve;
};

TrainRun train_model(const TrainOptions& options, const std::vector<net::Sample>& train_set,
                     const std::vector<net::Sample>& val_set, const net::EpochCallback& on_epoch = {});

// epoch, train_mse, val_mse.
CsvTable curve_table(const std::vector<net::EpochStats>& curve);

struct AblationVariant {
  std::string name;
  bool enable_ms;
  bool enable_ea;
};
// Baseline, +MS, +EA and the full model, in that order.
const std::vector<AblationVariant>& ablation_variants();

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  EvalResult eval;
};

struct AblationSummary {
  std::string variant;
  bool enable_ms = false;
  bool enable_ea = false;
  std::size_t params = 0;
  // [subset][0 = srcc, 1 = krcc, 2 = plcc], mean over seeds; NaN if any seed was undefined.
  std::array<std::array<double, 3>, 3> mean{};
};

struct AblationReport {
  std::string split_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRun> runs;
  std::vector<AblationSummary> summary;
};

// Trains every variant with identical options, data and seeds on the train
// split and evaluates on val. Throws ContractError when the manifest has no
// split. Each seed's run is reported; the summary averages over seeds.
AblationReport run_ablation(const Manifest& manifest, const std::filesystem::path& root, const TrainOptions& base,
                            const std::vector<std::uint64_t>& seeds, metrics::Mapping mapping,
                            const std::function<void(const std::string&)>& log = {});

// variant, enable_ms, enable_ea, params, seeds, split_hash, then srcc/krcc/plcc per subset.
CsvTable ablation_table(const AblationReport& report);
// variant, seed, then srcc/krcc/plcc per subset.
CsvTable ablation_runs_table(const AblationReport& report);

}  // namespace epd::pipeline
