#include "epdkit/sim/episode.hpp"

#include <json.hpp>

#include "epdkit/core/rng.hpp"
#include "epdkit/distort/distort.hpp"

namespace epd::sim {

std::string_view agent_name(Agent agent) {
  switch (agent) {
    case Agent::ppo: return "ppo";
    case Agent::sac: return "sac";
    case Agent::tdmpc2: return "tdmpc2";
  }
  return "?";
}

double EpisodeResult::score() const {
  switch (agent) {
    case Agent::ppo: return j_ppo;
    case Agent::sac: return j_sac;
    case Agent::tdmpc2: return j_tdmpc2;
  }
  return j_ppo;
}

EpisodeResult run_episode(const Scene& scene, Task task, const std::optional<distort::DistortionSpec>& spec,
                          const SimParams& sim, const RewardParams& reward, Agent agent,
                          std::uint64_t policy_seed) {
  check_scene(scene);
  validate(reward);
  EpisodeResult out;
  out.spec = spec;
  out.task = task;
  out.agent = agent;
  out.scene_seed = scene.scene_seed;
  out.trace.reserve(kEpisodeSteps);

  const SceneColors colors = SceneColors::of(scene);
  const std::uint64_t stream = derive_seed(policy_seed, static_cast<std::uint64_t>(agent));
  State state{scene, false, 0.0};
  std::optional<Estimate> last;

  for (int t = 0; t < kEpisodeSteps; ++t) {
    ImageBuf frame = render_observation(state.scene, task);
    if (t == 0) out.reference_image = frame;
    if (spec) {
      distort::DistortionSpec frame_spec = *spec;
      frame_spec.seed = distort::frame_seed(spec->seed, static_cast<std::uint64_t>(t));
      frame = distort::apply_distortion(frame, frame_spec);
    }
    const Estimate est = perceive(frame, colors, sim.tau_c, last ? &*last : nullptr);
    if (t == 0) out.evaluated_image = std::move(frame);
    last = est;

    const PolicyOutput policy = scripted_policy(est, state, task, sim, derive_seed(stream, static_cast<std::uint64_t>(t)));
    const StepOutcome outcome = step(state, task, policy.action, sim);

    StepRecord rec;
    rec.t = t;
    rec.gripper = state.scene.gripper_pos;
    rec.object = state.scene.object_pos;
    rec.held = state.held;
    rec.height = state.height;
    rec.action = policy.action;
    rec.clipped = outcome.clipped;
    rec.confidence = est.object_confidence;
    rec.reward = outcome.reward;
    rec.entropy = policy.entropy;
    rec.distance = outcome.distance;
    out.trace.push_back(rec);
  }

  out.j_ppo = aggregate_ppo(out.trace);
  out.j_sac = aggregate_sac(out.trace, reward);
  out.j_tdmpc2 = aggregate_tdmpc2(out.trace, reward);
  out.mean_reward = out.j_ppo / kEpisodeSteps;
  return out;
}

std::string trace_to_json(const EpisodeResult& result) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : result.trace)
    steps.push_back({{"t", s.t},
                     {"gripper", {s.gripper.x, s.gripper.y}},
                     {"object", {s.object.x, s.object.y}},
                     {"held", s.held},
                     {"height", s.height},
                     {"action", {s.action.dx, s.action.dy, s.action.grip ? 1 : 0}},
                     {"clipped", s.clipped},
                     {"confidence", s.confidence},
                     {"reward", s.reward},
                     {"entropy", s.entropy},
                     {"distance", s.distance}});
  return steps.dump(2);
}

}  // namespace epd::sim
