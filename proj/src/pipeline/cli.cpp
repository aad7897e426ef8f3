#include "epdkit/pipeline/cli.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "epdkit/core/error.hpp"
#include "epdkit/distort/distort.hpp"
#include "epdkit/net/checkpoint.hpp"
#include "epdkit/pipeline/analyze.hpp"
#include "epdkit/pipeline/experiment.hpp"
#include "epdkit/pipeline/generate.hpp"
#include "epdkit/pipeline/split.hpp"

namespace epd::pipeline {

namespace fs = std::filesystem;

namespace {

// Bad option values that CLI11 cannot check by itself; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto parse_token(const std::string& what, const std::string& token, F&& parse) {
  try {
    return parse(token);
  } catch (const Error&) {
    throw UsageError("invalid " + what + " '" + token + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

fs::path manifest_root(const fs::path& manifest) {
  const fs::path parent = manifest.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

struct Options {
  // distort
  std::string input, output, kind;
  int level = 1;
  std::uint64_t seed = 0;
  // generate
  std::string out_dir;
  int scenes = 5;
  std::string tasks = "push,pick", kinds = "all", levels = "1,2,3,4,5";
  std::size_t samples = 900;
  // split
  std::string manifest;
  double train_fraction = 0.8;
  // train / ablate
  std::string preset = "toy", checkpoint_out, curve;
  bool no_ms = false, no_ea = false;
  int fc_hidden = 0, epochs = 30, batch = 16;
  double lr = 1e-3;
  std::string seeds = "0,1,2";
  // eval
  std::vector<std::string> scorers, checkpoints;
  std::string mapping = "poly3", split = "val", csv_out, scores_out;
  // correlate
  std::string external;
  bool verbose = false;
};

TrainOptions train_options(const Options& o) {
  TrainOptions t;
  t.preset = parse_token("preset", o.preset, [](const std::string& s) { return net::parse_preset(s); });
  t.enable_ms = !o.no_ms;
  t.enable_ea = !o.no_ea;
  if (o.fc_hidden > 0) t.fc_hidden = o.fc_hidden;
  t.epochs = o.epochs;
  t.batch_size = o.batch;
  t.lr = o.lr;
  t.seed = o.seed;
  return t;
}

void cmd_distort(const Options& o, std::ostream& out) {
  const auto kind = parse_token("kind", o.kind, [](const std::string& s) { return distort::parse_kind(s); });
  const ImageBuf img = read_png(o.input);
  write_png(distort::apply_distortion(img, {kind, o.level, o.seed}), o.output);
  out << "wrote " << o.output << "\n";
}

void cmd_kinds(std::ostream& out) {
  out << "kind,category,parameter,levels\n";
  for (const auto& k : distort::list_kinds()) {
    out << k.name << "," << distort::category_code(k.category) << "," << k.parameter << ",";
    for (int l = 0; l < distort::kLevelCount; ++l) out << (l ? " " : "") << k.levels[l];
    out << "\n";
  }
}

void cmd_generate(const Options& o, std::ostream& out) {
  GenerationConfig cfg;
  cfg.scenes = o.scenes;
  cfg.seed = o.seed;
  cfg.tasks.clear();
  for (const auto& t : split_list(o.tasks))
    cfg.tasks.push_back(parse_token("task", t, [](const std::string& s) { return sim::parse_task(s); }));
  if (o.kinds == "all") {
    cfg.kinds = all_kinds();
  } else {
    for (const auto& k : split_list(o.kinds))
      cfg.kinds.push_back(parse_token("kind", k, [](const std::string& s) { return distort::parse_kind(s); }));
  }
  cfg.levels.clear();
  for (const auto& l : split_list(o.levels))
    cfg.levels.push_back(parse_token("level", l, [](const std::string& s) {
      try {
        return std::stoi(s);
      } catch (const std::exception&) {
        throw RangeError("not an integer");
      }
    }));
  const auto start = std::chrono::steady_clock::now();
  const Manifest m = generate(cfg, o.out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "generated " << m.records.size() << " records in " << format_number(secs) << " s\n";
  out << "manifest " << (fs::path(o.out_dir) / "manifest.json").string() << "\n";
}

void cmd_learnset(const Options& o, std::ostream& out) {
  SeveritySetConfig cfg;
  cfg.samples = o.samples;
  cfg.seed = o.seed;
  const Manifest m = make_severity_set(cfg, o.out_dir);
  out << "wrote " << m.records.size() << " records, split hash " << m.split->hash << "\n";
}

void cmd_split(const Options& o, std::ostream& out, std::ostream& err) {
  Manifest m = load_manifest(o.manifest);
  const SplitOutcome s = assign_split(m, o.seed, o.train_fraction);
  for (const auto& w : s.warnings) err << "warning: " << w << "\n";
  save_manifest(m, o.output.empty() ? fs::path(o.manifest) : fs::path(o.output));
  out << "train " << s.train << " val " << s.val << " hash " << s.info.hash << "\n";
}

void cmd_train(const Options& o, std::ostream& out) {
  const Manifest m = load_manifest(o.manifest);
  if (!m.split) throw ContractError("manifest has no split; run 'epdkit split' first");
  const fs::path root = manifest_root(o.manifest);
  const TrainOptions opts = train_options(o);
  const auto train_set = load_samples(m, root, Split::train);
  const auto val_set = load_samples(m, root, Split::val);
  out << "params " << net::count_params(opts.model_config()) << "\n";
  auto run = train_model(opts, train_set, val_set, [&out](const net::EpochStats& e) {
    out << "epoch " << e.epoch << " train_mse " << format_number(e.train_mse) << " val_mse "
        << format_number(e.val_mse) << std::endl;
  });
  net::save_checkpoint(o.checkpoint_out, run.model, &run.optimizer, {opts.epochs, opts.seed, m.split->hash});
  if (!o.curve.empty()) write_csv(o.curve, curve_table(run.curve));
  out << "wrote " << o.checkpoint_out << "\n";
}

void cmd_eval(const Options& o, std::ostream& out) {
  if (o.scorers.empty() && o.checkpoints.empty()) throw UsageError("give at least one --scorer or --checkpoint");
  const Manifest m = load_manifest(o.manifest);
  const fs::path root = manifest_root(o.manifest);
  const auto mapping =
      parse_token("mapping", o.mapping, [](const std::string& s) { return metrics::parse_mapping(s); });
  Split split = Split::val;
  if (o.split == "train") split = Split::train;
  else if (o.split == "all") split = Split::none;
  else if (o.split != "val") throw UsageError("invalid split '" + o.split + "' (expected train, val or all)");

  std::vector<Scorer> scorers;
  for (const auto& s : o.scorers) {
    if (s == "psnr") scorers.push_back(psnr_scorer());
    else if (s == "ssim") scorers.push_back(ssim_scorer());
    else if (s == "dmos") scorers.push_back(dmos_scorer());
    else if (s == "permutation") scorers.push_back(permutation_scorer(o.seed));
    else throw UsageError("invalid scorer '" + s + "' (expected psnr, ssim, dmos or permutation)");
  }
  for (const auto& c : o.checkpoints) {
    auto ck = net::load_checkpoint(c);
    if (m.split && !ck.meta.split_hash.empty() && ck.meta.split_hash != m.split->hash)
      std::cerr << "warning: checkpoint " << c << " was trained on split " << ck.meta.split_hash << "\n";
    scorers.push_back(model_scorer(std::make_shared<const net::Maeiqa<float>>(std::move(ck.model)),
                                   fs::path(c).stem().string()));
  }
  std::vector<EvalResult> results;
  for (const auto& s : scorers) results.push_back(evaluate(m, root, s, mapping, split));
  const CsvTable table = eval_table(results);
  if (o.csv_out.empty()) out << to_csv(table);
  else write_csv(o.csv_out, table);
  if (!o.scores_out.empty()) {
    if (results.size() != 1) throw UsageError("--scores-out needs exactly one scorer");
    write_csv(o.scores_out, scores_table(results.front()));
  }
  for (const auto& r : results)
    for (const auto& s : r.subsets)
      if (!s.report) std::cerr << "note: " << r.scorer << "/" << subset_name(s.subset) << " undefined: " << s.note << "\n";
}

void cmd_ablate(const Options& o, std::ostream& out) {
  const Manifest m = load_manifest(o.manifest);
  const auto mapping =
      parse_token("mapping", o.mapping, [](const std::string& s) { return metrics::parse_mapping(s); });
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(o.seeds))
    seeds.push_back(parse_token("seed", s, [](const std::string& t) {
      try {
        return static_cast<std::uint64_t>(std::stoull(t));
      } catch (const std::exception&) {
        throw RangeError("not an integer");
      }
    }));
  const auto report = run_ablation(m, manifest_root(o.manifest), train_options(o), seeds, mapping,
                                   [&out](const std::string& line) { out << line << std::endl; });
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw IoError("cannot create " + o.out_dir + ": " + ec.message());
  write_csv(fs::path(o.out_dir) / "ablation.csv", ablation_table(report));
  write_csv(fs::path(o.out_dir) / "ablation_runs.csv", ablation_runs_table(report));
  out << to_csv(ablation_table(report));
}

void cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
  const Manifest m = load_manifest(o.manifest);
  for (const auto& w : write_analysis(m, o.out_dir)) err << "warning: " << w << "\n";
  out << "wrote analysis tables to " << o.out_dir << "\n";
}

void cmd_correlate(const Options& o, std::ostream& out) {
  const Manifest m = load_manifest(o.manifest);
  const auto mapping =
      parse_token("mapping", o.mapping, [](const std::string& s) { return metrics::parse_mapping(s); });
  const auto res = correlate_external(m, read_csv(o.external), mapping);
  out << "matched " << res.matched << " of " << res.manifest_records << " srcc " << format_number(res.report.srcc)
      << " krcc " << format_number(res.report.krcc) << " plcc " << format_number(res.report.plcc)
      << (res.report.fit_fallback ? " (fit fallback)" : "") << "\n";
  if (!o.csv_out.empty()) write_csv(o.csv_out, scatter_table(res));
}

void cmd_params(const Options& o, std::ostream& out) {
  TrainOptions t = train_options(o);
  if (o.preset == "full" && o.fc_hidden <= 0) t.fc_hidden.reset();
  const auto cfg = t.model_config();
  if (o.verbose)
    for (const auto& p : net::parameter_specs(cfg)) {
      std::size_t n = 1;
      for (auto d : p.shape) n *= static_cast<std::size_t>(d);
      out << p.name << " " << n << "\n";
    }
  out << net::count_params(cfg) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embodied perceptual distortion toolkit", "epdkit"};
  app.require_subcommand(1);
  Options o;

  auto* distort_cmd = app.add_subcommand("distort", "Apply one catalog distortion to a PNG");
  distort_cmd->add_option("--input", o.input, "Input PNG")->required();
  distort_cmd->add_option("--output", o.output, "Output PNG")->required();
  distort_cmd->add_option("--kind", o.kind, "Distortion kind (see 'kinds')")->required();
  distort_cmd->add_option("--level", o.level, "Severity 1..5")->required();
  distort_cmd->add_option("--seed", o.seed, "Seed for stochastic kinds");

  auto* kinds_cmd = app.add_subcommand("kinds", "List the distortion catalog");

  auto* gen = app.add_subcommand("generate", "Run agents on distorted observations and write a dataset");
  gen->add_option("--out", o.out_dir, "Output directory")->required();
  gen->add_option("--scenes", o.scenes, "Scenes per task");
  gen->add_option("--tasks", o.tasks, "Comma-separated tasks");
  gen->add_option("--kinds", o.kinds, "Comma-separated kinds or 'all'");
  gen->add_option("--levels", o.levels, "Comma-separated levels");
  gen->add_option("--seed", o.seed, "Master seed");

  auto* learnset = app.add_subcommand("learnset", "Write a synthetic set labelled by distortion severity");
  learnset->add_option("--out", o.out_dir, "Output directory")->required();
  learnset->add_option("--samples", o.samples, "Number of records");
  learnset->add_option("--seed", o.seed, "Master seed");

  auto* split = app.add_subcommand("split", "Assign records to train and val");
  split->add_option("--manifest", o.manifest, "Manifest to split")->required();
  split->add_option("--seed", o.seed, "Shuffle seed");
  split->add_option("--train-fraction", o.train_fraction, "Fraction of each stratum used for training");
  split->add_option("--out", o.output, "Write here instead of updating the manifest in place");

  const auto add_train_options = [&o](CLI::App* cmd) {
    cmd->add_option("--preset", o.preset, "Backbone preset: full or toy");
    cmd->add_flag("--no-ms", o.no_ms, "Disable the multi-scale encoder");
    cmd->add_flag("--no-ea", o.no_ea, "Disable the attention modules");
    cmd->add_option("--fc-hidden", o.fc_hidden, "Override the head width");
    cmd->add_option("--epochs", o.epochs, "Training epochs");
    cmd->add_option("--batch", o.batch, "Mini-batch size");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
  };
  auto* train = app.add_subcommand("train", "Train the quality network on a split manifest");
  train->add_option("--manifest", o.manifest, "Split manifest")->required();
  train->add_option("--out", o.checkpoint_out, "Checkpoint path")->required();
  train->add_option("--curve", o.curve, "Write the loss curve CSV here");
  train->add_option("--seed", o.seed, "Initialization and shuffling seed");
  add_train_options(train);

  auto* eval = app.add_subcommand("eval", "Correlate scorers against dmos");
  eval->add_option("--manifest", o.manifest, "Manifest")->required();
  eval->add_option("--scorer", o.scorers, "psnr, ssim, dmos or permutation (repeatable)");
  eval->add_option("--checkpoint", o.checkpoints, "Trained checkpoint (repeatable)");
  eval->add_option("--mapping", o.mapping, "PLCC mapping: none, poly3 or logistic4");
  eval->add_option("--split", o.split, "Records to evaluate: val, train or all");
  eval->add_option("--seed", o.seed, "Seed of the permutation scorer");
  eval->add_option("--out", o.csv_out, "Write the table here instead of stdout");
  eval->add_option("--scores-out", o.scores_out, "Write per-record scores here");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the four module variants");
  ablate->add_option("--manifest", o.manifest, "Split manifest")->required();
  ablate->add_option("--out", o.out_dir, "Output directory")->required();
  ablate->add_option("--seeds", o.seeds, "Comma-separated training seeds");
  ablate->add_option("--mapping", o.mapping, "PLCC mapping");
  add_train_options(ablate);

  auto* analyze = app.add_subcommand("analyze", "Summary tables of a dataset");
  analyze->add_option("--manifest", o.manifest, "Manifest")->required();
  analyze->add_option("--out", o.out_dir, "Output directory")->required();

  auto* correlate = app.add_subcommand("correlate", "Correlate external scores with dmos");
  correlate->add_option("--manifest", o.manifest, "Manifest")->required();
  correlate->add_option("--external", o.external, "CSV with id,score columns")->required();
  correlate->add_option("--mapping", o.mapping, "PLCC mapping");
  correlate->add_option("--out", o.csv_out, "Write the scatter table here");

  auto* params = app.add_subcommand("params", "Count trainable parameters");
  params->add_option("--preset", o.preset, "Backbone preset: full or toy")->default_val("full");
  params->add_flag("--no-ms", o.no_ms, "Disable the multi-scale encoder");
  params->add_flag("--no-ea", o.no_ea, "Disable the attention modules");
  params->add_option("--fc-hidden", o.fc_hidden, "Override the head width");
  params->add_flag("--verbose", o.verbose, "List every parameter tensor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (distort_cmd->parsed()) cmd_distort(o, out);
    else if (kinds_cmd->parsed()) cmd_kinds(out);
    else if (gen->parsed()) cmd_generate(o, out);
    else if (learnset->parsed()) cmd_learnset(o, out);
    else if (split->parsed()) cmd_split(o, out, err);
    else if (train->parsed()) cmd_train(o, out);
    else if (eval->parsed()) cmd_eval(o, out);
    else if (ablate->parsed()) cmd_ablate(o, out);
    else if (analyze->parsed()) cmd_analyze(o, out, err);
    else if (correlate->parsed()) cmd_correlate(o, out);
    else if (params->parsed()) cmd_params(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace epd::pipeline
