#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "pibr/game.hpp"
#include "pibr/lang.hpp"
#include "pibr/loss.hpp"
#include "pibr/operators.hpp"
#include "pibr/rollout.hpp"

// Programmatic iterated best response: alternate per-agent best-response
// operators against the frozen partner, score every profile by social
// welfare, and return the best profile seen.
namespace pibr::engine {

enum class InnerReturn { kLast, kBest };

struct PibrSettings {
  int outer_steps = 4;      // K
  int inner_steps = 1;      // T
  int eval_episodes = 10;   // E
  InnerReturn inner_return = InnerReturn::kLast;
  std::uint64_t seed = 0;
};

struct RunSpec {
  game::GameSpec game;
  PibrSettings settings;
  std::array<ops::OperatorConfig, game::kNumAgents> operators;
};

struct InnerLoopState {
  int t = 0;
  std::vector<std::pair<ops::Candidate, LossRecord>> candidates;
  // (candidate index, mean return) of the best candidate that passed.
  std::optional<std::pair<std::size_t, double>> best_valid;
};

struct BestResponse {
  lang::SourceText source;
  InnerLoopState state;
  bool unit_test_ok = false;
};

// Uniform policy written with exact (/ 1 n) entries.
lang::SourceText initial_policy(const game::GameSpec& game);

BestResponse compute_best_response(ops::BestResponseOperator& op, const game::GameSpec& game,
                                   int role, const lang::SourceText& opponent_source,
                                   int inner_steps, int eval_episodes, std::uint64_t seed,
                                   InnerReturn inner_return = InnerReturn::kLast);

BestResponse compute_best_response(const ops::OperatorConfig& config,
                                   const game::GameSpec& game, int role,
                                   const lang::SourceText& opponent_source, int inner_steps,
                                   int eval_episodes, std::uint64_t seed,
                                   InnerReturn inner_return = InnerReturn::kLast);

struct ProfileRecord {
  int step = 0;  // k, 1-based
  int acting_agent = 0;
  std::array<lang::SourceText, game::kNumAgents> sources;
  bool unit_test_ok = false;
  // Absent when the candidate failed or evaluation aborted.
  std::optional<game::SWReport> sw;
  std::string eval_error;
  InnerLoopState inner;
  std::int64_t wall_ms = 0;
};

struct RunHistory {
  std::vector<ProfileRecord> records;
  int best_index = -1;
  RunSpec spec;
  std::uint64_t seed = 0;
};

// Seeds for step k's welfare evaluation and inner loop.
std::uint64_t evaluation_seed(std::uint64_t run_seed, int step);
std::uint64_t inner_seed(std::uint64_t run_seed, int step);

// Argmax of mean SW over records with a defined SW, earliest on ties.
// Throws AllProfilesInvalid.
int select_best_index(const std::vector<ProfileRecord>& records);
const ProfileRecord& select_best_profile(const RunHistory& history);

using OperatorFactory =
    std::function<std::unique_ptr<ops::BestResponseOperator>(int agent, const ops::OperatorConfig&)>;

RunHistory pibr_run(const RunSpec& spec, const OperatorFactory& factory = {});

}  // namespace pibr::engine
