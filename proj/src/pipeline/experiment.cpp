#include "epdkit/pipeline/experiment.hpp"

#include <cmath>

#include "epdkit/core/error.hpp"
#include "epdkit/core/parallel.hpp"
#include "epdkit/core/rng.hpp"
#include "epdkit/distort/distort.hpp"
#include "epdkit/pipeline/canonical_json.hpp"
#include "epdkit/pipeline/generate.hpp"
#include "epdkit/pipeline/split.hpp"

namespace epd::pipeline {

Manifest make_severity_set(const SeveritySetConfig& config, const std::filesystem::path& out_dir) {
  if (config.samples < 2 || config.kinds.empty() || config.levels.empty())
    throw RangeError("severity set needs at least two samples, one kind and one level");
  Manifest m;
  m.config.scenes = static_cast<int>(config.samples);
  m.config.tasks = {sim::Task::push};
  m.config.kinds = config.kinds;
  m.config.levels = config.levels;
  m.config.seed = config.seed;
  validate(m.config);

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "ref", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "dist", ec);
  if (ec) throw IoError("cannot create output directories under " + out_dir.string() + ": " + ec.message());

  Rng jitter(derive_seed(config.seed, 4));
  const std::size_t nk = config.kinds.size();
  for (std::size_t i = 0; i < config.samples; ++i) {
    EpdRecord r;
    r.task = sim::Task::push;
    r.scene = static_cast<int>(i);
    r.scene_seed = scene_seed(config.seed, r.scene);
    const auto kind = config.kinds[i % nk];
    const int level = config.levels[(i / nk) % config.levels.size()];
    r.spec = {kind, level, distortion_seed(config.seed, r.scene, kind, level)};
    r.id = record_id(r.task, r.scene, kind, level);
    r.ref_path = "ref/" + r.id + ".png";
    r.dist_path = "dist/" + r.id + ".png";
    r.dmos = round6(4.5 * (5 - level) / 4.0 + 0.5 * jitter.uniform());
    r.task_score = r.dmos;
    r.all_dmos = r.dmos;
    m.records.push_back(std::move(r));
  }
  parallel_for(m.records.size(), [&](std::size_t i) {
    const auto& r = m.records[i];
    const ImageBuf clean = sim::render_observation(sim::make_scene(r.scene_seed), r.task);
    write_png(clean, out_dir / r.ref_path);
    write_png(distort::apply_distortion(clean, r.spec), out_dir / r.dist_path);
  });
  assign_split(m, config.seed);
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

std::vector<net::Sample> load_samples(const Manifest& manifest, const std::filesystem::path& root, Split split) {
  const auto recs = select(manifest, split);
  std::vector<net::Sample> out(recs.size());
  parallel_for(recs.size(), [&](std::size_t i) {
    out[i] = {recs[i]->id, read_png(root / recs[i]->dist_path), recs[i]->dmos};
  });
  return out;
}

net::ModelConfig TrainOptions::model_config() const {
  net::ModelConfig cfg = net::preset_config(preset, enable_ms, enable_ea);
  if (fc_hidden) cfg.fc_hidden = *fc_hidden;
  net::validate(cfg);
  return cfg;
}

TrainRun train_model(const TrainOptions& options, const std::vector<net::Sample>& train_set,
                     const std::vector<net::Sample>& val_set, const net::EpochCallback& on_epoch) {
  if (!(options.lr > 0.0) || !std::isfinite(options.lr)) throw RangeError("learning rate must be positive");
  ad::OptimizerConfig opt;
  opt.lr = options.lr;
  TrainRun run{net::Maeiqa<float>(options.model_config(), derive_seed(options.seed, 1)), ad::Optimizer<float>(opt), {}};
  net::TrainConfig tc;
  tc.epochs = options.epochs;
  tc.batch_size = options.batch_size;
  tc.seed = derive_seed(options.seed, 2);
  run.curve = net::train(run.model, run.optimizer, train_set, val_set, tc, on_epoch);
  return run;
}

CsvTable curve_table(const std::vector<net::EpochStats>& curve) {
  CsvTable t;
  t.header = {"epoch", "train_mse", "val_mse"};
  for (const auto& e : curve)
    t.rows.push_back({std::to_string(e.epoch), format_number(e.train_mse), format_number(e.val_mse)});
  return t;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants{
      {"baseline", false, false}, {"+ms", true, false}, {"+ea", false, true}, {"ma-eiqa", true, true}};
  return variants;
}

AblationReport run_ablation(const Manifest& manifest, const std::filesystem::path& root, const TrainOptions& base,
                            const std::vector<std::uint64_t>& seeds, metrics::Mapping mapping,
                            const std::function<void(const std::string&)>& log) {
  if (!manifest.split) throw ContractError("ablation needs a split manifest; run the split step first");
  if (seeds.empty()) throw RangeError("ablation needs at least one seed");
  AblationReport report;
  report.split_hash = manifest.split->hash;
  report.seeds = seeds;
  const auto train_set = load_samples(manifest, root, Split::train);
  const auto val_set = load_samples(manifest, root, Split::val);

  for (const auto& variant : ablation_variants()) {
    TrainOptions opts = base;
    opts.enable_ms = variant.enable_ms;
    opts.enable_ea = variant.enable_ea;
    AblationSummary sum;
    sum.variant = variant.name;
    sum.enable_ms = variant.enable_ms;
    sum.enable_ea = variant.enable_ea;
    sum.params = net::count_params(opts.model_config());
    for (auto& s : sum.mean) s.fill(0.0);

    for (std::uint64_t seed : seeds) {
      opts.seed = seed;
      auto run = train_model(opts, train_set, val_set);
      auto model = std::make_shared<const net::Maeiqa<float>>(std::move(run.model));
      AblationRun ar{variant.name, seed, evaluate(manifest, root, model_scorer(model, variant.name), mapping)};
      for (std::size_t s = 0; s < ar.eval.subsets.size() && s < 3; ++s) {
        const auto& rep = ar.eval.subsets[s].report;
        const double nan = std::nan("");
        sum.mean[s][0] += rep ? rep->srcc : nan;
        sum.mean[s][1] += rep ? rep->krcc : nan;
        sum.mean[s][2] += rep ? rep->plcc : nan;
      }
      if (log) {
        const auto& all = ar.eval.subsets.front();
        log(variant.name + " seed " + std::to_string(seed) + ": all srcc " +
            (all.report ? format_number(all.report->srcc) : "nan"));
      }
      report.runs.push_back(std::move(ar));
    }
    for (auto& s : sum.mean)
      for (double& v : s) v /= static_cast<double>(seeds.size());
    report.summary.push_back(sum);
  }
  return report;
}

namespace {

std::vector<std::string> metric_header() {
  std::vector<std::string> h;
  for (Subset s : kSubsets)
    for (const char* m : {"srcc", "krcc", "plcc"}) h.push_back(std::string(subset_name(s)) + "_" + m);
  return h;
}

}  // namespace

CsvTable ablation_table(const AblationReport& report) {
  CsvTable t;
  t.header = {"variant", "enable_ms", "enable_ea", "params", "seeds", "split_hash"};
  const auto mh = metric_header();
  t.header.insert(t.header.end(), mh.begin(), mh.end());
  for (const auto& s : report.summary) {
    std::vector<std::string> row{s.variant, s.enable_ms ? "1" : "0", s.enable_ea ? "1" : "0", std::to_string(s.params),
                                 std::to_string(report.seeds.size()), report.split_hash};
    for (const auto& sub : s.mean)
      for (double v : sub) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable ablation_runs_table(const AblationReport& report) {
  CsvTable t;
  t.header = {"variant", "seed"};
  const auto mh = metric_header();
  t.header.insert(t.header.end(), mh.begin(), mh.end());
  for (const auto& r : report.runs) {
    std::vector<std::string> row{r.variant, std::to_string(r.seed)};
    for (Subset s : kSubsets) {
      const SubsetResult* found = nullptr;
      for (const auto& x : r.eval.subsets)
        if (x.subset == s) found = &x;
      if (found && found->report) {
        row.push_back(format_number(found->report->srcc));
        row.push_back(format_number(found->report->krcc));
        row.push_back(format_number(found->report->plcc));
      } else {
        row.insert(row.end(), {"nan", "nan", "nan"});
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace epd::pipeline
