#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "pibr/operators.hpp"

namespace pibr::ops {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string vector_text(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fixed6(v[i]);
  return out + "]";
}

int argmax_lowest(const std::array<double, 3>& u) {
  int best = 0;
  for (int a = 1; a < 3; ++a) {
    if (u[a] > u[best]) best = a;
  }
  return best;
}

class OracleOperator : public BestResponseOperator {
 public:
  explicit OracleOperator(OperatorConfig config) : config_(std::move(config)) {}

  Candidate generate(const OperatorContext& ctx) override {
    const game::GameSpec& game = *ctx.game;
    if (game.kind == game::GameKind::kForaging) {
      return oracle_forage_search(game, ctx.role, ctx.opponent_source,
                                  config_.forage.template_budget,
                                  config_.forage.eval_episodes, ctx.seed);
    }
    if (config_.kind == OperatorKind::kOracleProposer) {
      return oracle_commitment_proposer(game, ctx.role, ctx.opponent_source);
    }
    return oracle_matrix_best_response(
        game, ctx.role, opponent_mixed_strategy_or_uniform(game, ctx.opponent_source));
  }

 private:
  OperatorConfig config_;
};

class LlmOperator : public BestResponseOperator {
 public:
  explicit LlmOperator(OperatorConfig config) : config_(std::move(config)) {}

  Candidate generate(const OperatorContext& ctx) override { return llm_generate(config_, ctx); }

 private:
  OperatorConfig config_;
};

}  // namespace

std::string_view operator_kind_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kOracleBR: return "oracle_br";
    case OperatorKind::kOracleProposer: return "oracle_proposer";
    case OperatorKind::kOracleForage: return "oracle_forage";
    case OperatorKind::kLLM: return "llm";
  }
  return "unknown";
}

OperatorConfig resolve_operator_config(OperatorConfig config) {
  if (config.kind == OperatorKind::kLLM) {
    if (config.llm.base_url.empty()) {
      if (const char* env = std::getenv("PIBR_LLM_BASE_URL")) config.llm.base_url = env;
    }
    if (config.llm.base_url.empty()) {
      throw Error(Errc::kInvalidOperatorConfig,
                  "llm operator requires base_url (config or PIBR_LLM_BASE_URL)");
    }
    if (config.llm.model.empty()) {
      throw Error(Errc::kInvalidOperatorConfig, "llm operator requires a model");
    }
    if (config.llm.max_retries < 1) {
      throw Error(Errc::kInvalidOperatorConfig, "llm.max_retries must be >= 1");
    }
  }
  if (config.forage.eval_episodes < 1 || config.forage.template_budget < 1) {
    throw Error(Errc::kInvalidOperatorConfig,
                "forage.eval_episodes and forage.template_budget must be >= 1");
  }
  return config;
}

std::unique_ptr<BestResponseOperator> make_operator(const OperatorConfig& config) {
  OperatorConfig resolved = resolve_operator_config(config);
  if (resolved.kind == OperatorKind::kLLM) return std::make_unique<LlmOperator>(resolved);
  return std::make_unique<OracleOperator>(resolved);
}

Candidate generate(const OperatorConfig& config, const OperatorContext& ctx) {
  return make_operator(config)->generate(ctx);
}

std::vector<double> opponent_mixed_strategy(const game::GameSpec& game,
                                            const lang::SourceText& opponent_source) {
  const lang::ValidationReport report = lang::validate_source(game, opponent_source);
  if (!report.ok) {
    throw Error(Errc::kInvalidDistribution,
                "opponent policy is invalid: " + report.failure->message);
  }
  const lang::PolicyProgram program = lang::parse(opponent_source);
  game::History empty;
  empty.states.push_back(game::encode_state(game, game::reset(game, 0)));
  return lang::check_distribution(lang::evaluate_policy(program, empty), game.n_actions);
}

std::vector<double> opponent_mixed_strategy_or_uniform(const game::GameSpec& game,
                                                       const lang::SourceText& opponent_source) {
  try {
    return opponent_mixed_strategy(game, opponent_source);
  } catch (const Error& e) {
    spdlog::warn("oracle: {}; assuming a uniform opponent", e.what());
    return std::vector<double>(game.n_actions, 1.0 / game.n_actions);
  }
}

std::array<double, 3> expected_payoffs(const game::GameSpec& game, int role,
                                       const std::vector<double>& q) {
  std::array<double, 3> u{};
  for (int mine = 0; mine < 3; ++mine) {
    for (int theirs = 0; theirs < 3; ++theirs) {
      const double payoff =
          role == 0 ? game.matrix[mine][theirs] : game.matrix[theirs][mine];
      u[mine] += payoff * q[theirs];
    }
  }
  return u;
}

std::string constant_policy_source(int n_actions, int action, const std::string& comment) {
  std::ostringstream out;
  std::istringstream lines(comment);
  for (std::string line; std::getline(lines, line);) out << "; " << line << "\n";
  out << "(policy (h) (list";
  for (int a = 0; a < n_actions; ++a) out << (a == action ? " 1" : " 0");
  out << "))\n";
  return out.str();
}

Candidate oracle_matrix_best_response(const game::GameSpec& game, int role,
                                      const std::vector<double>& q) {
  const std::array<double, 3> u = expected_payoffs(game, role, q);
  const int action = argmax_lowest(u);
  const std::string comment = "best response for agent " + std::to_string(role) +
                              " to opponent mix q=" + vector_text(q) + ": u=" +
                              vector_text({u.begin(), u.end()}) + " -> action " +
                              std::to_string(action);
  return {lang::make_source(constant_policy_source(game.n_actions, action, comment)),
          CandidateOrigin::kOracle};
}

Candidate oracle_commitment_proposer(const game::GameSpec& game, int role,
                                     const lang::SourceText& opponent_source) {
  int k_star = 0;
  double global_best = game.matrix[0][0];
  for (int k = 0; k < 3; ++k) {
    if (game.matrix[k][k] > game.matrix[k_star][k_star]) k_star = k;
    for (int j = 0; j < 3; ++j) global_best = std::max(global_best, game.matrix[k][j]);
  }
  const std::vector<double> q = opponent_mixed_strategy_or_uniform(game, opponent_source);
  // The welfare optimum is off the diagonal: a symmetric commitment cannot
  // reach it, so behave like the plain best-response oracle.
  if (game.matrix[k_star][k_star] < global_best) {
    return oracle_matrix_best_response(game, role, q);
  }
  const std::string k = std::to_string(k_star);
  if (q[k_star] == 1.0) {
    return {lang::make_source(constant_policy_source(
                game.n_actions, k_star,
                "opponent is committed to action " + k + "; matching it")),
            CandidateOrigin::kOracle};
  }
  return {lang::make_source(constant_policy_source(
              game.n_actions, k_star,
              "COMMIT " + k + "\nI am committing to action " + k + ". Please match me.")),
          CandidateOrigin::kOracle};
}

}  // namespace pibr::ops
