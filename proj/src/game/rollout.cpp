#include "pibr/rollout.hpp"

#include <numeric>

namespace pibr::game {

PolicyRuntimeFailure::PolicyRuntimeFailure(int agent, int step, lang::FailureKind kind,
                                           const std::string& message)
    : Error(Errc::kPolicyRuntimeFailure, "agent " + std::to_string(agent) + " failed at step " +
                                             std::to_string(step) + ": " + message),
      agent_(agent),
      step_(step),
      kind_(kind),
      cause_(message) {}

std::uint64_t action_seed(std::uint64_t seed, int agent, int step) {
  return derive_seed(seed, {static_cast<std::uint64_t>(agent), static_cast<std::uint64_t>(step)});
}

Trajectory rollout(const GameSpec& game, const PolicyPair& policies, std::uint64_t seed,
                   std::int64_t fuel) {
  Trajectory trajectory;
  WorldState state = reset(game, seed);
  trajectory.history.states.push_back(encode_state(game, state));
  for (int t = 0;; ++t) {
    JointAction joint{};
    for (int i = 0; i < kNumAgents; ++i) {
      try {
        std::vector<double> dist = lang::check_distribution(
            lang::evaluate_policy(*policies[i], trajectory.history, fuel), game.n_actions);
        RandomStream stream(action_seed(seed, i, t));
        joint[i] = lang::sample(dist, stream);
      } catch (const lang::LangError& e) {
        throw PolicyRuntimeFailure(i, t, e.kind(), e.what());
      }
    }
    StepResult result = step(game, state, joint);
    state = std::move(result.state);
    trajectory.history.actions.push_back(joint);
    trajectory.history.states.push_back(encode_state(game, state));
    trajectory.rewards.push_back(result.rewards);
    for (int i = 0; i < kNumAgents; ++i) trajectory.returns[i] += result.rewards[i];
    if (result.done) {
      trajectory.terminal_step = t + 1;
      break;
    }
  }
  if (game.kind == GameKind::kForaging) {
    trajectory.all_collected = std::none_of(state.foods.begin(), state.foods.end(),
                                            [](const FoodSlot& f) { return f.alive; });
  }
  return trajectory;
}

SWReport evaluate_social_welfare(const GameSpec& game, const PolicyPair& policies,
                                 int episodes, std::uint64_t seed) {
  if (episodes < 1) throw Error(Errc::kInvalidConfig, "episodes must be >= 1");
  SWReport report;
  report.episodes = episodes;
  report.seed = seed;
  for (int e = 0; e < episodes; ++e) {
    const Trajectory t = rollout(game, policies, seed + static_cast<std::uint64_t>(e));
    report.per_episode_sw.push_back(t.returns[0] + t.returns[1]);
  }
  report.mean_sw = std::accumulate(report.per_episode_sw.begin(), report.per_episode_sw.end(), 0.0) /
                   episodes;
  return report;
}

}  // namespace pibr::game
