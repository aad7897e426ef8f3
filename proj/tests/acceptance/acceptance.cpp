// Acceptance harness. Run with a criterion number (1, 3, 4, 5, 6, 7 or 8) or
// "all". Prints one "criterion N: PASS|FAIL ..." line per criterion and exits
// non-zero when any requested criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "epdkit/autodiff/ops.hpp"
#include "epdkit/core/error.hpp"
#include "epdkit/distort/distort.hpp"
#include "epdkit/metrics/correlation.hpp"
#include "epdkit/metrics/full_reference.hpp"
#include "epdkit/net/config.hpp"
#include "epdkit/net/maeiqa.hpp"
#include "epdkit/pipeline/analyze.hpp"
#include "epdkit/pipeline/cli.hpp"
#include "epdkit/pipeline/experiment.hpp"
#include "epdkit/pipeline/generate.hpp"
#include "epdkit/pipeline/split.hpp"
#include "gradcheck.hpp"
#include "metric_oracles.hpp"

namespace {

using namespace epd;
namespace fs = std::filesystem;
using testing::check_gradients;
using testing::distinct_tensor;
using testing::project;
using testing::random_tensor;
using testing::TapeD;
using testing::TensorD;
using testing::VarD;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("epdkit_accept_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "epdkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = pipeline::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (code != 0) std::cerr << err.str();
  return code;
}

// ---------------------------------------------------------------- 1

Outcome criterion_1() {
  Outcome o;
  std::string text;
  o.require(cli({"params", "--preset", "full"}, &text) == 0, "params command");
  const double full = std::stod(text);
  cli({"params", "--preset", "full", "--no-ms"}, &text);
  const double no_ms = std::stod(text);
  cli({"params", "--preset", "full", "--no-ea"}, &text);
  const double no_ea = std::stod(text);
  const double rel = full / 48.83e6 - 1.0;
  o.detail << "full=" << static_cast<long>(full) << " (" << rel * 100 << "% vs 48.83M) no_ms=" << static_cast<long>(no_ms)
           << " no_ea=" << static_cast<long>(no_ea);
  o.require(std::abs(rel) <= 0.10, "within 10%");
  o.require(no_ms < full && no_ea < full, "ablations strictly smaller");
  return o;
}

// ---------------------------------------------------------------- 3

// Values kept at least 0.02 away from zero so ReLU has no kink in reach of the step.
TensorD off_zero(ad::Shape shape, std::uint64_t seed) {
  TensorD t = random_tensor(std::move(shape), seed);
  for (double& v : t.values())
    if (std::abs(v) < 0.02) v += v < 0 ? -0.02 : 0.02;
  return t;
}

Outcome criterion_3() {
  Outcome o;
  constexpr int kInstances = 20;
  using Build = testing::LossBuilder;
  struct OpCase {
    std::string name;
    std::function<std::pair<Build, std::vector<TensorD>>(int)> make;
  };
  const std::vector<OpCase> cases{
      {"conv2d",
       [](int s) {
         const int stride = 1 + s % 2, pad = s % 3;
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::conv2d(v[0], v[1], v[2], stride, pad), s);
                          }),
                          std::vector{random_tensor({2, 2, 5, 6}, s), random_tensor({3, 2, 3, 3}, s + 1),
                                      random_tensor({3}, s + 2)}};
       }},
      {"pool_max",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::pool(v[0], ad::PoolMode::max, 2, 2), s);
                          }),
                          std::vector{distinct_tensor({2, 2, 6, 6}, s)}};
       }},
      {"pool_avg",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::pool(v[0], ad::PoolMode::avg, 2, 2), s);
                          }),
                          std::vector{random_tensor({2, 2, 6, 6}, s)}};
       }},
      {"pool_global_avg",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::pool(v[0], ad::PoolMode::global_avg), s);
                          }),
                          std::vector{random_tensor({2, 3, 4, 5}, s)}};
       }},
      {"pool_global_max",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::pool(v[0], ad::PoolMode::global_max), s);
                          }),
                          std::vector{distinct_tensor({2, 3, 4, 5}, s)}};
       }},
      {"reduce_channel_avg",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::reduce_channel(v[0], ad::ChannelReduce::avg), s);
                          }),
                          std::vector{random_tensor({2, 4, 3, 3}, s)}};
       }},
      {"reduce_channel_max",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::reduce_channel(v[0], ad::ChannelReduce::max), s);
                          }),
                          std::vector{distinct_tensor({2, 4, 3, 3}, s)}};
       }},
      {"concat_channels",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            const std::vector<VarD> parts{v[0], v[1]};
                            return project(ad::concat_channels<double>(parts), s);
                          }),
                          std::vector{random_tensor({2, 1, 3, 3}, s), random_tensor({2, 2, 3, 3}, s + 1)}};
       }},
      {"upsample_bilinear",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::upsample_bilinear(v[0], 7, 5 + s % 4), s);
                          }),
                          std::vector{random_tensor({1, 2, 3, 4}, s)}};
       }},
      {"relu",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) { return project(ad::relu(v[0]), s); }),
                          std::vector{off_zero({2, 3, 4}, s)}};
       }},
      {"sigmoid",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) { return project(ad::sigmoid(v[0]), s); }),
                          std::vector{random_tensor({2, 3, 4}, s, -4, 4)}};
       }},
      {"linear",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::linear(v[0], v[1], v[2]), s);
                          }),
                          std::vector{random_tensor({3, 5}, s), random_tensor({5, 4}, s + 1), random_tensor({4}, s + 2)}};
       }},
      {"add_broadcast",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) { return project(ad::add(v[0], v[1]), s); }),
                          std::vector{random_tensor({2, 3, 4, 4}, s), random_tensor({2, 3, 1, 1}, s + 1)}};
       }},
      {"mul_broadcast",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) { return project(ad::mul(v[0], v[1]), s); }),
                          std::vector{random_tensor({2, 3, 4, 4}, s), random_tensor({2, 1, 4, 4}, s + 1)}};
       }},
      {"mse_loss",
       [](int s) {
         return std::pair{Build([](TapeD&, const std::vector<VarD>& v) { return ad::mse_loss(v[0], v[1]); }),
                          std::vector{random_tensor({6}, s), random_tensor({6}, s + 1)}};
       }},
      {"sum",
       [](int s) {
         return std::pair{Build([](TapeD&, const std::vector<VarD>& v) { return ad::sum(ad::mul(v[0], v[0])); }),
                          std::vector{random_tensor({3, 4}, s)}};
       }},
      {"reshape",
       [](int s) {
         return std::pair{Build([=](TapeD&, const std::vector<VarD>& v) {
                            return project(ad::reshape(v[0], ad::Shape{4, 6}), s);
                          }),
                          std::vector{random_tensor({2, 3, 4}, s)}};
       }},
  };

  double worst_op = 0.0;
  std::string worst_name;
  for (const auto& c : cases)
    for (int s = 0; s < kInstances; ++s) {
      auto [build, inputs] = c.make(s + 1);
      const auto r = check_gradients(build, inputs);
      if (r.max_rel_error > worst_op) worst_op = r.max_rel_error, worst_name = c.name;
      o.require(r.max_rel_error < 1e-4, c.name + " seed " + std::to_string(s));
    }

  // Composed toy model on 32-pixel inputs, two sampled entries per parameter tensor.
  net::ModelConfig cfg = net::preset_config(net::Preset::toy);
  cfg.input_size = 32;
  double worst_e2e = 0.0;
  std::size_t checked = 0, kinks = 0;
  for (int s = 0; s < kInstances; ++s) {
    std::vector<ImageBuf> imgs{testing::corpus_image(100 + 2 * s, 32), testing::corpus_image(101 + 2 * s, 32)};
    const TensorD input = net::images_to_input<double>(imgs, 32);
    const TensorD target(ad::Shape{2}, std::vector<double>{1.0, 3.0});
    const net::Maeiqa<double> model(cfg, 500 + s);
    const auto loss_of = [&](const net::Maeiqa<double>& m) {
      TapeD tape;
      const VarD score = ad::reshape(m.forward(tape, tape.constant(input)).score, ad::Shape{2});
      return ad::mse_loss(score, tape.constant(target)).value().item();
    };
    TapeD tape;
    const VarD score = ad::reshape(model.forward(tape, tape.constant(input)).score, ad::Shape{2});
    tape.backward(ad::mse_loss(score, tape.constant(target)));
    net::Maeiqa<double> probe(cfg, 500 + s);
    Rng pick(s);
    const double base = loss_of(model);
    for (std::size_t k = 0; k < model.parameters().size(); ++k) {
      const auto node = tape.find_param(model.parameters()[k]);
      if (!node) {
        o.require(false, "parameter without gradient " + model.parameters()[k].name);
        continue;
      }
      const auto& grad = tape.grad(*node);
      auto& values = probe.parameters()[k].value;
      for (int rep = 0; rep < 2; ++rep) {
        const std::size_t i = pick.below(values.size());
        const double original = values[i];
        // A ReLU or max switch inside the stencil shows up as disagreeing one-sided
        // slopes; shrink the step until both sides see the same linear piece.
        double numeric = 0.0;
        for (double step = 1e-5;; step *= 0.01) {
          values[i] = original + step;
          const double up = loss_of(probe);
          values[i] = original - step;
          const double down = loss_of(probe);
          values[i] = original;
          numeric = (up - down) / (2 * step);
          const double forward = (up - base) / step, backward = (base - down) / step;
          if (std::abs(forward - backward) <= 1e-4 * std::max(std::abs(numeric), 1e-2) || step < 1e-8) break;
          ++kinks;
        }
        const double rel = std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-4});
        worst_e2e = std::max(worst_e2e, rel);
        ++checked;
      }
    }
  }
  o.require(worst_e2e < 1e-3, "end-to-end relative error");
  o.detail << cases.size() << " ops x " << kInstances << " instances, worst per-op rel " << worst_op << " ("
           << worst_name << "); end-to-end " << kInstances << " models, " << checked << " entries (" << kinks
           << " stencils narrowed at a kink), worst rel " << worst_e2e;
  return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion_4() {
  Outcome o;
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 5 + rng.below(46);
    const auto x = testing::tied_vector(rng, n), y = testing::tied_vector(rng, n);
    worst = std::max({worst, std::abs(metrics::srcc(x, y) - testing::srcc_oracle(x, y)),
                      std::abs(metrics::krcc(x, y) - testing::krcc_oracle(x, y)),
                      std::abs(metrics::plcc(x, y).value - testing::pearson_oracle(x, y))});
  }
  o.require(worst < 1e-12, "oracle agreement");
  const double s = metrics::srcc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2});
  const double k = metrics::krcc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
  o.require(std::abs(s + 0.5) < 1e-15, "SRCC example");
  o.require(std::abs(k - 1.0 / 3.0) < 1e-15, "KRCC example");
  const ImageBuf img = testing::corpus_image(7, 64);
  const double ss = metrics::ssim(img, img);
  ImageBuf a(32, 32, 0.4f), b(32, 32, 0.5f);
  const double p = metrics::psnr(a, b);
  o.require(std::abs(ss - 1.0) < 1e-12, "SSIM identical");
  o.require(std::abs(p - 20.0) < 1e-5, "PSNR 20 dB");
  o.detail << "1000 vectors, worst |lib - oracle| " << worst << "; SRCC ex " << s << ", KRCC ex " << k << ", SSIM - 1 "
           << ss - 1.0 << ", PSNR " << p;
  return o;
}

// ---------------------------------------------------------------- 5

Outcome criterion_5() {
  Outcome o;
  const auto images = testing::corpus(10);
  int violations = 0;
  for (const auto& info : distort::list_kinds())
    for (int level = 1; level <= 5; ++level)
      for (std::size_t i = 0; i < 3; ++i) {
        const distort::DistortionSpec spec{info.kind, level, 40 + i};
        const ImageBuf a = distort::apply_distortion(images[i], spec);
        const ImageBuf b = distort::apply_distortion(images[i], spec);
        bool ok = a == b && a.same_shape(images[i]);
        for (float v : a.data()) ok = ok && v >= 0.0f && v <= 1.0f;
        if (!ok) {
          ++violations;
          o.require(false, std::string(info.name) + " level " + std::to_string(level));
        }
      }
  int monotone = 0;
  for (const auto& info : distort::list_kinds()) {
    if (!info.monotone) continue;
    ++monotone;
    double previous = std::numeric_limits<double>::infinity();
    for (int level = 1; level <= 5; ++level) {
      double total = 0.0;
      for (std::size_t i = 0; i < images.size(); ++i)
        total += testing::psnr_oracle(images[i], distort::apply_distortion(images[i], {info.kind, level, 500 + i}));
      const double mean = total / static_cast<double>(images.size());
      o.require(mean <= previous, std::string(info.name) + " PSNR rises at level " + std::to_string(level));
      previous = mean;
    }
  }
  o.require(monotone == 11, "11 monotone families");
  o.detail << "25 kinds x 5 levels x 3 images, " << violations << " determinism/range/shape violations; " << monotone
           << " monotone families checked on 10 images";
  return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion_6() {
  Outcome o;
  TempDir dir("mini");
  const auto run = [&](const std::string& sub) {
    return cli({"generate", "--out", (dir.path() / sub).string(), "--scenes", "5", "--tasks", "push,pick", "--seed",
                "2024"});
  };
  o.require(run("a") == 0, "first generation");
  const auto m = pipeline::load_manifest(dir.path() / "a" / "manifest.json");
  o.require(m.records.size() == 1250, "1250 records");
  bool in_range = true;
  for (const auto& r : m.records) in_range = in_range && r.dmos >= 0.0 && r.dmos <= 5.0;
  o.require(in_range, "dmos in [0, 5]");

  const auto tc = pipeline::task_correlation(m);
  o.require(tc.srcc[0][1] > 0.5 && tc.srcc[0][2] > 0.5, "All-vs-subtask SRCC > 0.5");

  // Aggregator identities on re-run episodes of every 25th record.
  int identity_checks = 0;
  bool identities = true;
  for (std::size_t i = 0; i < m.records.size(); i += 25) {
    const auto& r = m.records[i];
    const auto pseed = pipeline::policy_seed(m.config.seed, r.task, r.scene, r.spec.kind, r.spec.level);
    for (sim::Agent agent : sim::kAgents) {
      const auto ep = sim::run_episode(sim::make_scene(r.scene_seed), r.task, r.spec, m.config.sim, m.config.reward,
                                       agent, pseed);
      const double ppo = sim::aggregate_ppo(ep.trace);
      identities = identities && sim::aggregate_sac(ep.trace, {1.0, 0.0, 0.5, 0.01}) == ppo &&
                   sim::aggregate_tdmpc2(ep.trace, {0.99, 0.1, 0.0, 0.01}) == ppo;
      identity_checks += 2;
    }
  }
  o.require(identities, "aggregator identities");

  o.require(run("b") == 0, "second generation");
  bool identical = slurp(dir.path() / "a" / "manifest.json") == slurp(dir.path() / "b" / "manifest.json");
  std::size_t files = 1;
  for (const auto& r : m.records)
    for (const auto& rel : {r.ref_path, r.dist_path}) {
      identical = identical && slurp(dir.path() / "a" / rel) == slurp(dir.path() / "b" / rel);
      ++files;
    }
  o.require(identical, "byte-identical regeneration");
  o.detail << m.records.size() << " records; SRCC all-push " << tc.srcc[0][1] << ", all-pick " << tc.srcc[0][2]
           << ", push-pick " << tc.srcc[1][2] << "; " << identity_checks << " identity checks exact; " << files
           << " files byte-identical across runs";
  return o;
}

// ---------------------------------------------------------------- 7

Outcome criterion_7() {
  Outcome o;
  TempDir dir("learn");
  pipeline::SeveritySetConfig set;
  set.samples = 900;
  set.seed = 7;
  const auto m = pipeline::make_severity_set(set, dir.path());

  pipeline::TrainOptions opts;
  opts.preset = net::Preset::toy;
  opts.epochs = 20;
  opts.batch_size = 16;
  opts.lr = 1e-3;
  const auto report = pipeline::run_ablation(m, dir.path(), opts, {0, 1, 2}, metrics::Mapping::poly3,
                                             [](const std::string& line) { std::cout << "  " << line << std::endl; });
  std::map<std::string, double> mean_srcc;
  for (const auto& s : report.summary) mean_srcc[s.variant] = s.mean[0][0];
  double full_min = 1.0;
  for (const auto& r : report.runs)
    if (r.variant == "ma-eiqa") full_min = std::min(full_min, r.eval.subsets[0].report ? r.eval.subsets[0].report->srcc : -1.0);

  o.require(mean_srcc["ma-eiqa"] >= 0.8, "toy model val SRCC >= 0.8");
  o.require(mean_srcc["ma-eiqa"] >= mean_srcc["baseline"] - 0.05, "full >= baseline - 0.05");
  o.detail << m.records.size() << " records (" << select(m, pipeline::Split::train).size() << " train), "
           << opts.epochs << " epochs; mean val SRCC over 3 seeds: baseline " << mean_srcc["baseline"] << ", +ms "
           << mean_srcc["+ms"] << ", +ea " << mean_srcc["+ea"] << ", ma-eiqa " << mean_srcc["ma-eiqa"]
           << " (worst seed " << full_min << ")";
  return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion_8() {
  Outcome o;
  TempDir dir("eval");
  pipeline::GenerationConfig cfg;
  cfg.scenes = 2;
  cfg.kinds = {distort::Kind::gaussian_blur, distort::Kind::white_noise, distort::Kind::jpeg,
               distort::Kind::darken,        distort::Kind::pixelate,    distort::Kind::color_diffusion,
               distort::Kind::mean_shift,    distort::Kind::contrast_change};
  cfg.seed = 8;
  auto m = pipeline::generate(cfg, dir.path());
  pipeline::assign_split(m, 8);
  const auto mapping = metrics::Mapping::poly3;

  const auto truth = pipeline::evaluate(m, dir.path(), pipeline::dmos_scorer(), mapping);
  int unit_cells = 0;
  for (const auto& s : truth.subsets) {
    if (!s.report) continue;
    for (double v : {s.report->srcc, s.report->krcc, s.report->plcc}) unit_cells += std::abs(v - 1.0) < 1e-9;
  }
  o.require(unit_cells == 9, "dmos passthrough gives 1.0 in all nine cells");

  const auto perm = pipeline::evaluate(m, dir.path(), pipeline::permutation_scorer(1), mapping);
  int inside = 0;
  std::ostringstream bands;
  for (const auto& s : perm.subsets) {
    std::vector<double> t;
    for (const auto* r : perm.records)
      if (s.subset == pipeline::Subset::all || (s.subset == pipeline::Subset::push) == (r->task == sim::Task::push))
        t.push_back(r->dmos);
    const auto band = pipeline::permutation_band(t, 1000, 0.99, 99, mapping);
    if (!s.report) continue;
    inside += std::abs(s.report->srcc) <= band.srcc;
    inside += std::abs(s.report->krcc) <= band.krcc;
    inside += std::abs(s.report->plcc) <= band.plcc;
    bands << " " << pipeline::subset_name(s.subset) << ": |srcc| " << std::abs(s.report->srcc) << " <= " << band.srcc;
  }
  o.require(inside == 9, "permutation scorer inside the 99% band");
  o.detail << truth.records.size() << " val records; passthrough unit cells " << unit_cells << "/9; permutation cells inside band "
           << inside << "/9;" << bands.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    std::function<Outcome()> run;
    double budget_s;
  };
  const std::map<std::string, Criterion> criteria{
      {"1", {criterion_1, 5}},   {"3", {criterion_3, 120}},  {"4", {criterion_4, 60}}, {"5", {criterion_5, 180}},
      {"6", {criterion_6, 900}}, {"7", {criterion_7, 1800}}, {"8", {criterion_8, 120}}};
  std::vector<std::string> wanted;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "all") {
      for (const auto& [k, v] : criteria) wanted.push_back(k);
    } else {
      wanted.emplace_back(argv[i]);
    }
  }
  if (wanted.empty()) {
    std::cerr << "usage: acceptance <1|3|4|5|6|7|8|all>...\n";
    return 2;
  }
  bool all_pass = true;
  for (const auto& id : wanted) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = it->second.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(secs < it->second.budget_s, "runtime over " + std::to_string(static_cast<int>(it->second.budget_s)) + " s");
    std::cout << "criterion " << id << ": " << (out.pass ? "PASS" : "FAIL") << " (" << secs << " s) "
              << out.detail.str() << std::endl;
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
