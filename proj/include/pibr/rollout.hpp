#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pibr/error.hpp"
#include "pibr/game.hpp"
#include "pibr/lang.hpp"

namespace pibr::game {

using PolicyPair = std::array<const lang::PolicyProgram*, kNumAgents>;

// A policy failed (error or malformed distribution) mid-episode.
class PolicyRuntimeFailure : public Error {
 public:
  PolicyRuntimeFailure(int agent, int step, lang::FailureKind kind, const std::string& message);

  int agent() const noexcept { return agent_; }
  int step() const noexcept { return step_; }
  lang::FailureKind kind() const noexcept { return kind_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  int agent_;
  int step_;
  lang::FailureKind kind_;
  std::string cause_;
};

// Stream used for agent `agent`'s action at step `step` of episode `seed`.
std::uint64_t action_seed(std::uint64_t seed, int agent, int step);

Trajectory rollout(const GameSpec& game, const PolicyPair& policies, std::uint64_t seed,
                   std::int64_t fuel = lang::kDefaultFuel);

struct SWReport {
  std::vector<double> per_episode_sw;
  double mean_sw = 0.0;
  int episodes = 0;
  std::uint64_t seed = 0;
};

// Runs episodes with seeds seed, seed+1, ..., seed+episodes-1.
SWReport evaluate_social_welfare(const GameSpec& game, const PolicyPair& policies,
                                 int episodes, std::uint64_t seed);

}  // namespace pibr::game
