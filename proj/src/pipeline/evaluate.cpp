#include "epdkit/pipeline/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "epdkit/core/error.hpp"
#include "epdkit/core/parallel.hpp"
#include "epdkit/core/rng.hpp"
#include "epdkit/metrics/full_reference.hpp"

namespace epd::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename F>
std::vector<double> per_record(const std::vector<const EpdRecord*>& recs, F&& f) {
  std::vector<double> out(recs.size());
  parallel_for(recs.size(), [&](std::size_t i) { out[i] = f(*recs[i]); });
  return out;
}

std::vector<double> shuffled(std::vector<double> v, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

}  // namespace

Scorer psnr_scorer() {
  return {"psnr", 0, [](const std::vector<const EpdRecord*>& recs, const fs::path& root) {
            return per_record(recs, [&](const EpdRecord& r) {
              return metrics::psnr(read_png(root / r.ref_path), read_png(root / r.dist_path));
            });
          }};
}

Scorer ssim_scorer() {
  return {"ssim", 0, [](const std::vector<const EpdRecord*>& recs, const fs::path& root) {
            return per_record(recs, [&](const EpdRecord& r) {
              return metrics::ssim(read_png(root / r.ref_path), read_png(root / r.dist_path));
            });
          }};
}

Scorer dmos_scorer() {
  return {"dmos", 0, [](const std::vector<const EpdRecord*>& recs, const fs::path&) {
            std::vector<double> out;
            for (const auto* r : recs) out.push_back(r->dmos);
            return out;
          }};
}

Scorer permutation_scorer(std::uint64_t seed) {
  return {"permutation", 0, [seed](const std::vector<const EpdRecord*>& recs, const fs::path&) {
            std::vector<double> truth;
            for (const auto* r : recs) truth.push_back(r->dmos);
            return shuffled(std::move(truth), seed);
          }};
}

Scorer model_scorer(std::shared_ptr<const net::Maeiqa<float>> model, std::string name) {
  const std::size_t params = model->parameter_count();
  return {std::move(name), params, [model](const std::vector<const EpdRecord*>& recs, const fs::path& root) {
            std::vector<ImageBuf> images(recs.size());
            parallel_for(recs.size(), [&](std::size_t i) { images[i] = read_png(root / recs[i]->dist_path); });
            return model->predict(images);
          }};
}

std::string_view subset_name(Subset subset) {
  switch (subset) {
    case Subset::all: return "all";
    case Subset::push: return "push";
    case Subset::pick: return "pick";
  }
  throw RangeError("unknown subset");
}

Subset parse_subset(std::string_view name) {
  for (Subset s : kSubsets)
    if (subset_name(s) == name) return s;
  throw RangeError("unknown subset '" + std::string(name) + "' (expected all, push or pick)");
}

EvalResult evaluate(const Manifest& manifest, const fs::path& root, const Scorer& scorer, metrics::Mapping mapping,
                    Split split, const std::vector<Subset>& subsets) {
  EvalResult out;
  out.scorer = scorer.name;
  out.params = scorer.params;
  out.mapping = mapping;
  out.records = select(manifest, manifest.split ? split : Split::none);
  if (out.records.empty()) throw RangeError("no records to evaluate in split " + std::string(split_name(split)));
  out.scores = scorer.score(out.records, root);
  if (out.scores.size() != out.records.size()) throw DimensionError("scorer returned the wrong number of scores");

  for (Subset subset : subsets) {
    SubsetResult res;
    res.subset = subset;
    std::vector<double> pred, truth;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
      const auto task = out.records[i]->task;
      if (subset == Subset::push && task != sim::Task::push) continue;
      if (subset == Subset::pick && task != sim::Task::pick) continue;
      double s = out.scores[i];
      if (std::isinf(s)) s = s > 0 ? kPsnrCap : -kPsnrCap;
      pred.push_back(s);
      truth.push_back(out.records[i]->dmos);
    }
    res.n = pred.size();
    try {
      res.report = metrics::correlate(pred, truth, mapping);
    } catch (const Error& e) {
      res.note = e.kind() + ": " + e.what();
    }
    out.subsets.push_back(std::move(res));
  }
  return out;
}

CsvTable eval_table(const std::vector<EvalResult>& results) {
  CsvTable t;
  t.header = {"scorer", "params", "mapping"};
  for (Subset s : kSubsets)
    for (const char* col : {"n", "srcc", "krcc", "plcc"}) t.header.push_back(std::string(subset_name(s)) + "_" + col);
  for (const auto& r : results) {
    std::vector<std::string> row{r.scorer, std::to_string(r.params), std::string(metrics::mapping_name(r.mapping))};
    for (Subset s : kSubsets) {
      const auto it = std::find_if(r.subsets.begin(), r.subsets.end(), [s](const auto& x) { return x.subset == s; });
      if (it == r.subsets.end()) {
        row.insert(row.end(), {"0", "nan", "nan", "nan"});
        continue;
      }
      row.push_back(std::to_string(it->n));
      if (it->report) {
        row.push_back(format_number(it->report->srcc));
        row.push_back(format_number(it->report->krcc));
        row.push_back(format_number(it->report->plcc));
      } else {
        row.insert(row.end(), {"nan", "nan", "nan"});
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable scores_table(const EvalResult& result) {
  CsvTable t;
  t.header = {"id", "task", "kind", "level", "dmos", "score"};
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = *result.records[i];
    t.rows.push_back({r.id, std::string(sim::task_name(r.task)), std::string(distort::kind_name(r.spec.kind)),
                      std::to_string(r.spec.level), format_number(r.dmos), format_number(result.scores[i])});
  }
  return t;
}

PermutationBand permutation_band(const std::vector<double>& truth, std::size_t permutations, double quantile,
                                 std::uint64_t seed, metrics::Mapping mapping) {
  if (permutations == 0) throw RangeError("at least one permutation is required");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw RangeError("quantile must lie in (0, 1]");
  std::vector<double> s(permutations), k(permutations), p(permutations);
  parallel_for(permutations, [&](std::size_t i) {
    const auto perm = shuffled(truth, derive_seed(seed, i));
    const auto rep = metrics::correlate(perm, truth, mapping);
    s[i] = std::abs(rep.srcc);
    k[i] = std::abs(rep.krcc);
    p[i] = std::abs(rep.plcc);
  });
  const auto q = [&](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
  };
  return {q(s), q(k), q(p), permutations, quantile};
}

}  // namespace epd::pipeline
