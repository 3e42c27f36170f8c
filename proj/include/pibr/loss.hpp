#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pibr/game.hpp"
#include "pibr/lang.hpp"

namespace pibr::engine {

struct EpisodeFeedback {
  double sw = 0.0;
  game::RewardPair returns{};
  std::string digest;  // short content hash of the rendered episode
  game::Trajectory trajectory;
};

struct UtilityFeedback {
  double mean_return = 0.0;  // ego agent's mean episode return
  std::vector<EpisodeFeedback> per_episode;
};

// Feedback for one inner-loop candidate: either the unit-test failure, or a
// pass with utility rollouts. `rendered` is render_loss() of the record.
struct LossRecord {
  std::optional<lang::ValidationFailure> unit_test;
  std::optional<UtilityFeedback> utility;
  std::string rendered;

  bool passed() const { return !unit_test.has_value(); }
  double test_loss() const { return unit_test ? 1.0 : 0.0; }
  // Negated utility; 0 when no rollouts happened.
  double utility_loss() const { return utility ? -utility->mean_return : 0.0; }
};

std::string render_loss(const LossRecord& loss);

LossRecord failed_loss(lang::ValidationFailure failure);
LossRecord passed_loss(std::vector<game::Trajectory> trajectories, int ego);

}  // namespace pibr::engine
