#include "pibr/pibr.hpp"

#include <spdlog/spdlog.h>

#include <chrono>

namespace pibr::engine {
namespace {

lang::PolicyProgram opponent_or_uniform(const game::GameSpec& game,
                                        const lang::SourceText& opponent_source) {
  const lang::ValidationReport report = lang::validate_source(game, opponent_source);
  if (report.ok) return lang::parse(opponent_source);
  spdlog::warn("opponent policy invalid ({}); rolling out against a uniform stand-in",
               report.failure->message);
  return lang::parse(initial_policy(game));
}

LossRecord score_candidate(const game::GameSpec& game, int role, const lang::SourceText& source,
                           const lang::PolicyProgram& opponent, int eval_episodes,
                           std::uint64_t seed) {
  const lang::ValidationReport report = lang::validate_source(game, source);
  if (!report.ok) return failed_loss(*report.failure);
  const lang::PolicyProgram mine = lang::parse(source);
  game::PolicyPair pair{};
  pair[role] = &mine;
  pair[1 - role] = &opponent;
  std::vector<game::Trajectory> trajectories;
  try {
    for (int e = 0; e < eval_episodes; ++e) {
      trajectories.push_back(
          game::rollout(game, pair, derive_seed(seed, {0x7e57ULL, static_cast<std::uint64_t>(e)})));
    }
  } catch (const game::PolicyRuntimeFailure& failure) {
    return failed_loss({failure.kind(), failure.what(), -1});
  }
  return passed_loss(std::move(trajectories), role);
}

}  // namespace

lang::SourceText initial_policy(const game::GameSpec& game) {
  std::string text = "; uniform initial policy\n(policy (h) (list";
  for (int a = 0; a < game.n_actions; ++a) text += " (/ 1 " + std::to_string(game.n_actions) + ")";
  return lang::make_source(text + "))\n");
}

BestResponse compute_best_response(ops::BestResponseOperator& op, const game::GameSpec& game,
                                   int role, const lang::SourceText& opponent_source,
                                   int inner_steps, int eval_episodes, std::uint64_t seed,
                                   InnerReturn inner_return) {
  if (inner_steps < 1) throw Error(Errc::kInvalidConfig, "inner steps T must be >= 1");
  if (eval_episodes < 1) throw Error(Errc::kInvalidConfig, "episodes E must be >= 1");
  const lang::PolicyProgram opponent = opponent_or_uniform(game, opponent_source);

  ops::OperatorContext ctx;
  ctx.game = &game;
  ctx.role = role;
  ctx.opponent_source = opponent_source;
  ctx.budget = inner_steps;
  ctx.grammar_doc = lang::grammar_doc();
  ctx.seed = seed;

  BestResponse result;
  for (int t = 1; t <= inner_steps; ++t) {
    ctx.t = t;
    ops::Candidate candidate = op.generate(ctx);
    LossRecord loss = score_candidate(game, role, candidate.source, opponent, eval_episodes, seed);
    if (loss.passed()) {
      const double mean = loss.utility->mean_return;
      if (!result.state.best_valid || mean > result.state.best_valid->second) {
        result.state.best_valid = {result.state.candidates.size(), mean};
      }
    }
    ctx.feedback_log.push_back(loss);
    result.state.candidates.emplace_back(std::move(candidate), std::move(loss));
    result.state.t = t;
  }

  std::size_t chosen = result.state.candidates.size() - 1;
  if (inner_return == InnerReturn::kBest) {
    if (!result.state.best_valid) {
      throw Error(Errc::kNoValidCandidate,
                  "no valid candidate among " + std::to_string(inner_steps) + " inner steps");
    }
    chosen = result.state.best_valid->first;
  }
  result.source = result.state.candidates[chosen].first.source;
  result.unit_test_ok = result.state.candidates[chosen].second.passed();
  return result;
}

BestResponse compute_best_response(const ops::OperatorConfig& config,
                                   const game::GameSpec& game, int role,
                                   const lang::SourceText& opponent_source, int inner_steps,
                                   int eval_episodes, std::uint64_t seed,
                                   InnerReturn inner_return) {
  auto op = ops::make_operator(config);
  return compute_best_response(*op, game, role, opponent_source, inner_steps, eval_episodes,
                               seed, inner_return);
}

std::uint64_t evaluation_seed(std::uint64_t run_seed, int step) {
  return derive_seed(run_seed, {0xe7a1ULL, static_cast<std::uint64_t>(step)});
}

std::uint64_t inner_seed(std::uint64_t run_seed, int step) {
  return derive_seed(run_seed, {0x1a4e5ULL, static_cast<std::uint64_t>(step)});
}

int select_best_index(const std::vector<ProfileRecord>& records) {
  int best = -1;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].sw) continue;
    if (best < 0 || records[i].sw->mean_sw > records[best].sw->mean_sw) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw Error(Errc::kAllProfilesInvalid, "no profile has a defined social welfare");
  return best;
}

const ProfileRecord& select_best_profile(const RunHistory& history) {
  return history.records[select_best_index(history.records)];
}

RunHistory pibr_run(const RunSpec& spec, const OperatorFactory& factory) {
  const PibrSettings& settings = spec.settings;
  if (settings.outer_steps < 1 || settings.inner_steps < 1 || settings.eval_episodes < 1) {
    throw Error(Errc::kInvalidConfig, "K, T and E must all be >= 1");
  }
  std::array<std::unique_ptr<ops::BestResponseOperator>, game::kNumAgents> operators;
  for (int i = 0; i < game::kNumAgents; ++i) {
    operators[i] = factory ? factory(i, spec.operators[i]) : ops::make_operator(spec.operators[i]);
  }

  RunHistory history;
  history.spec = spec;
  history.seed = settings.seed;
  std::array<lang::SourceText, game::kNumAgents> sources{initial_policy(spec.game),
                                                         initial_policy(spec.game)};
  for (int k = 1; k <= settings.outer_steps; ++k) {
    const auto started = std::chrono::steady_clock::now();
    const int i = (k - 1) % game::kNumAgents;
    BestResponse br = compute_best_response(
        *operators[i], spec.game, i, sources[1 - i], settings.inner_steps,
        settings.eval_episodes, inner_seed(settings.seed, k), settings.inner_return);
    sources[i] = br.source;

    ProfileRecord record;
    record.step = k;
    record.acting_agent = i;
    record.sources = sources;
    record.unit_test_ok = br.unit_test_ok;
    record.inner = std::move(br.state);
    if (!record.unit_test_ok) {
      record.eval_error = "candidate failed its unit test";
    } else {
      try {
        const lang::PolicyProgram p0 = lang::parse(sources[0]);
        const lang::PolicyProgram p1 = lang::parse(sources[1]);
        record.sw = game::evaluate_social_welfare(spec.game, {&p0, &p1},
                                                  settings.eval_episodes,
                                                  evaluation_seed(settings.seed, k));
      } catch (const Error& e) {
        record.eval_error = e.what();
        spdlog::warn("step {}: evaluation aborted: {}", k, e.what());
      }
    }
    record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    history.records.push_back(std::move(record));
  }
  history.best_index = select_best_index(history.records);
  return history;
}

}  // namespace pibr::engine
