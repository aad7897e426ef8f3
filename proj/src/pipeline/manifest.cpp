#include "epdkit/pipeline/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "epdkit/core/error.hpp"
#include "epdkit/pipeline/canonical_json.hpp"

namespace epd::pipeline {

using nlohmann::json;

double AgentScores::get(sim::Agent agent) const {
  return const_cast<AgentScores*>(this)->at(agent);
}

double& AgentScores::at(sim::Agent agent) {
  switch (agent) {
    case sim::Agent::ppo: return ppo;
    case sim::Agent::sac: return sac;
    case sim::Agent::tdmpc2: return tdmpc2;
  }
  throw RangeError("unknown agent");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::none: return "none";
    case Split::train: return "train";
    case Split::val: return "val";
  }
  throw RangeError("unknown split");
}

bool operator==(const GenerationConfig& a, const GenerationConfig& b) {
  const auto sim_tuple = [](const sim::SimParams& p) {
    return std::tuple(p.a_max, p.sigma_min, p.sigma_max, p.capture_radius, p.tau_c);
  };
  const auto reward_tuple = [](const sim::RewardParams& p) {
    return std::tuple(p.gamma, p.alpha, p.lambda, p.eps_d);
  };
  return a.scenes == b.scenes && a.tasks == b.tasks && a.kinds == b.kinds && a.levels == b.levels &&
         a.seed == b.seed && sim_tuple(a.sim) == sim_tuple(b.sim) && reward_tuple(a.reward) == reward_tuple(b.reward);
}

std::string record_id(sim::Task task, int scene, distort::Kind kind, int level) {
  std::ostringstream os;
  os << sim::task_name(task) << "_" << scene << "_" << distort::kind_name(kind) << "_" << level;
  return os.str();
}

namespace {

Split parse_split(const std::string& name) {
  if (name == "none") return Split::none;
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  throw FormatError("unknown split '" + name + "'");
}

json config_json(const GenerationConfig& c) {
  json tasks = json::array(), kinds = json::array();
  for (auto t : c.tasks) tasks.push_back(std::string(sim::task_name(t)));
  for (auto k : c.kinds) kinds.push_back(std::string(distort::kind_name(k)));
  return json{{"scenes", c.scenes},
              {"tasks", tasks},
              {"kinds", kinds},
              {"levels", c.levels},
              {"seed", c.seed},
              {"sim",
               {{"a_max", c.sim.a_max},
                {"sigma_min", c.sim.sigma_min},
                {"sigma_max", c.sim.sigma_max},
                {"capture_radius", c.sim.capture_radius},
                {"tau_c", c.sim.tau_c}}},
              {"reward",
               {{"gamma", c.reward.gamma},
                {"alpha", c.reward.alpha},
                {"lambda", c.reward.lambda},
                {"eps_d", c.reward.eps_d}}}};
}

GenerationConfig config_from(const json& j) {
  GenerationConfig c;
  c.scenes = j.at("scenes").get<int>();
  c.tasks.clear();
  for (const auto& t : j.at("tasks")) c.tasks.push_back(sim::parse_task(t.get<std::string>()));
  for (const auto& k : j.at("kinds")) c.kinds.push_back(distort::parse_kind(k.get<std::string>()));
  c.levels = j.at("levels").get<std::vector<int>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const json& s = j.at("sim");
  c.sim.a_max = s.at("a_max").get<double>();
  c.sim.sigma_min = s.at("sigma_min").get<double>();
  c.sim.sigma_max = s.at("sigma_max").get<double>();
  c.sim.capture_radius = s.at("capture_radius").get<double>();
  c.sim.tau_c = s.at("tau_c").get<double>();
  const json& r = j.at("reward");
  c.reward.gamma = r.at("gamma").get<double>();
  c.reward.alpha = r.at("alpha").get<double>();
  c.reward.lambda = r.at("lambda").get<double>();
  c.reward.eps_d = r.at("eps_d").get<double>();
  return c;
}

json record_json(const EpdRecord& r) {
  return json{{"id", r.id},
              {"task", std::string(sim::task_name(r.task))},
              {"scene", r.scene},
              {"scene_seed", r.scene_seed},
              {"kind", std::string(distort::kind_name(r.spec.kind))},
              {"level", r.spec.level},
              {"distortion_seed", r.spec.seed},
              {"ref_path", r.ref_path},
              {"dist_path", r.dist_path},
              {"agent_scores", {{"ppo", r.agent_scores.ppo}, {"sac", r.agent_scores.sac}, {"tdmpc2", r.agent_scores.tdmpc2}}},
              {"task_score", r.task_score},
              {"dmos", r.dmos},
              {"all_dmos", r.all_dmos},
              {"split", std::string(split_name(r.split))}};
}

// Integral JSON numbers are accepted where a float is expected.
double number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw FormatError(std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

EpdRecord record_from(const json& j) {
  EpdRecord r;
  r.id = j.at("id").get<std::string>();
  r.task = sim::parse_task(j.at("task").get<std::string>());
  r.scene = j.at("scene").get<int>();
  r.scene_seed = j.at("scene_seed").get<std::uint64_t>();
  r.spec.kind = distort::parse_kind(j.at("kind").get<std::string>());
  r.spec.level = j.at("level").get<int>();
  r.spec.seed = j.at("distortion_seed").get<std::uint64_t>();
  r.ref_path = j.at("ref_path").get<std::string>();
  r.dist_path = j.at("dist_path").get<std::string>();
  const json& a = j.at("agent_scores");
  r.agent_scores = {number(a, "ppo"), number(a, "sac"), number(a, "tdmpc2")};
  r.task_score = number(j, "task_score");
  r.dmos = number(j, "dmos");
  r.all_dmos = number(j, "all_dmos");
  r.split = parse_split(j.at("split").get<std::string>());
  return r;
}

}  // namespace

std::string serialize(const Manifest& m) {
  json records = json::array();
  for (const auto& r : m.records) records.push_back(record_json(r));
  json doc{{"format", m.format}, {"config", config_json(m.config)}, {"records", records}};
  if (m.split)
    doc["split"] = json{{"seed", m.split->seed},
                        {"train_fraction", m.split->train_fraction},
                        {"stratified", m.split->stratified},
                        {"hash", m.split->hash}};
  return canonical_json(doc);
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  try {
    const json doc = json::parse(text);
    m.format = doc.at("format").get<int>();
    if (m.format != kManifestFormat)
      throw FormatError("unsupported manifest format " + std::to_string(m.format));
    m.config = config_from(doc.at("config"));
    for (const auto& r : doc.at("records")) m.records.push_back(record_from(r));
    if (doc.contains("split")) {
      const json& s = doc.at("split");
      m.split = SplitInfo{s.at("seed").get<std::uint64_t>(), number(s, "train_fraction"),
                          s.at("stratified").get<bool>(), s.at("hash").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const RangeError& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  validate(m);
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  const std::string text = serialize(manifest);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void validate(const Manifest& m) {
  std::set<std::string> ids;
  for (const auto& r : m.records) {
    if (!ids.insert(r.id).second) throw FormatError("duplicate record id '" + r.id + "'");
    if (r.id != record_id(r.task, r.scene, r.spec.kind, r.spec.level))
      throw FormatError("record id '" + r.id + "' does not match its fields");
    if (r.spec.level < 1 || r.spec.level > 5) throw FormatError("record '" + r.id + "' has a bad level");
    for (double v : {r.agent_scores.ppo, r.agent_scores.sac, r.agent_scores.tdmpc2, r.task_score})
      if (!std::isfinite(v)) throw FormatError("record '" + r.id + "' has a non-finite score");
    for (double v : {r.dmos, r.all_dmos})
      if (!(v >= 0.0 && v <= 5.0)) throw FormatError("record '" + r.id + "' has dmos outside [0, 5]");
  }
  if (m.split && !m.records.empty())
    for (const auto& r : m.records)
      if (r.split == Split::none) throw FormatError("record '" + r.id + "' has no split assignment");
}

std::vector<const EpdRecord*> select(const Manifest& manifest, Split split) {
  std::vector<const EpdRecord*> out;
  for (const auto& r : manifest.records)
    if (split == Split::none || r.split == split) out.push_back(&r);
  return out;
}

}  // namespace epd::pipeline
