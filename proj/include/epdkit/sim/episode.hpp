#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epdkit/distort/catalog.hpp"
#include "epdkit/sim/reward.hpp"

namespace epd::sim {

inline constexpr int kEpisodeSteps = 50;

// Reward agent: which aggregate scores the episode and which policy noise
// stream drives it.
enum class Agent { ppo, sac, tdmpc2 };
inline constexpr std::array<Agent, 3> kAgents{Agent::ppo, Agent::sac, Agent::tdmpc2};

std::string_view agent_name(Agent agent);

struct EpisodeResult {
  std::vector<StepRecord> trace;
  double j_ppo = 0.0;
  double j_sac = 0.0;
  double j_tdmpc2 = 0.0;
  double mean_reward = 0.0;
  std::optional<distort::DistortionSpec> spec;  // nullopt: clean observations
  Task task = Task::push;
  Agent agent = Agent::ppo;
  std::uint64_t scene_seed = 0;
  ImageBuf reference_image;  // clean initial frame
  ImageBuf evaluated_image;  // initial frame as the agent saw it

  // The aggregate matching the episode's agent.
  double score() const;
};

// 50 steps of render -> distort -> perceive -> policy -> step. Frame t is
// distorted with seed frame_seed(spec.seed, t); the policy noise at step t
// is seeded from (policy_seed, agent, t).
EpisodeResult run_episode(const Scene& scene, Task task, const std::optional<distort::DistortionSpec>& spec,
                          const SimParams& sim, const RewardParams& reward, Agent agent,
                          std::uint64_t policy_seed);

// One JSON object per step, as an array.
std::string trace_to_json(const EpisodeResult& result);

}  // namespace epd::sim
