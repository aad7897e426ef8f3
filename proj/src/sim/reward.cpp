#include "epdkit/sim/reward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epdkit/core/error.hpp"

namespace epd::sim {
namespace {

void check_trace(std::span<const StepRecord> trace) {
  if (trace.empty()) throw RangeError("cannot aggregate an empty trace");
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (trace[i].t != static_cast<int>(i))
      throw RangeError("incomplete trace: step " + std::to_string(i) + " is numbered " + std::to_string(trace[i].t));
}

}  // namespace

void validate(const RewardParams& p) {
  if (!std::isfinite(p.gamma) || p.gamma <= 0.0 || p.gamma > 1.0) throw RangeError("gamma must lie in (0, 1]");
  if (!std::isfinite(p.alpha) || p.alpha < 0.0) throw RangeError("alpha must be finite and non-negative");
  if (!std::isfinite(p.lambda) || p.lambda < 0.0) throw RangeError("lambda must be finite and non-negative");
  if (!std::isfinite(p.eps_d) || p.eps_d <= 0.0) throw RangeError("eps_d must be finite and positive");
}

double aggregate_ppo(std::span<const StepRecord> trace) {
  check_trace(trace);
  double total = 0.0;
  for (const auto& s : trace) total += s.reward;
  return total;
}

double aggregate_sac(std::span<const StepRecord> trace, const RewardParams& p) {
  check_trace(trace);
  double total = 0.0;
  for (const auto& s : trace) total += std::pow(p.gamma, s.t) * (s.reward + p.alpha * s.entropy);
  return total;
}

double aggregate_tdmpc2(std::span<const StepRecord> trace, const RewardParams& p) {
  check_trace(trace);
  double total = 0.0;
  for (const auto& s : trace) total += s.reward + p.lambda / std::max(s.distance, p.eps_d);
  return total;
}

}  // namespace epd::sim
