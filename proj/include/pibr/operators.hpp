#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pibr/error.hpp"
#include "pibr/game.hpp"
#include "pibr/lang.hpp"
#include "pibr/loss.hpp"

namespace pibr::ops {

enum class OperatorKind { kOracleBR, kOracleProposer, kOracleForage, kLLM };

std::string_view operator_kind_name(OperatorKind kind);

struct LlmSettings {
  std::string base_url;  // falls back to PIBR_LLM_BASE_URL
  std::string model;
  double temperature = 1.0;
  int max_retries = 3;   // total request attempts
  int timeout_s = 120;
  int backoff_ms = 500;  // doubled after every failed attempt
};

struct ForageSettings {
  int eval_episodes = 10;
  int template_budget = 8;
};

struct OperatorConfig {
  OperatorKind kind = OperatorKind::kOracleBR;
  LlmSettings llm;
  ForageSettings forage;
};

// Resolves env fallbacks and checks the kind-specific invariants.
OperatorConfig resolve_operator_config(OperatorConfig config);

struct OperatorContext {
  const game::GameSpec* game = nullptr;
  int role = 0;
  lang::SourceText opponent_source;
  int t = 1;
  int budget = 1;
  std::vector<engine::LossRecord> feedback_log;
  std::string grammar_doc;
  std::uint64_t seed = 0;
};

enum class CandidateOrigin { kOracle, kLlm, kLlmRepair };

struct Candidate {
  lang::SourceText source;
  CandidateOrigin origin = CandidateOrigin::kOracle;
};

// A best-response operator: opponent source in, ego source out.
class BestResponseOperator {
 public:
  virtual ~BestResponseOperator() = default;
  virtual Candidate generate(const OperatorContext& ctx) = 0;
};

std::unique_ptr<BestResponseOperator> make_operator(const OperatorConfig& config);

Candidate generate(const OperatorConfig& config, const OperatorContext& ctx);

// ---- Matrix oracles --------------------------------------------------------

// The opponent's distribution on the empty history. Throws on invalid source.
std::vector<double> opponent_mixed_strategy(const game::GameSpec& game,
                                            const lang::SourceText& opponent_source);

// Same, but substitutes uniform (and logs a warning) when the source is invalid.
std::vector<double> opponent_mixed_strategy_or_uniform(const game::GameSpec& game,
                                                       const lang::SourceText& opponent_source);

std::array<double, 3> expected_payoffs(const game::GameSpec& game, int role,
                                       const std::vector<double>& q);

std::string constant_policy_source(int n_actions, int action, const std::string& comment);

Candidate oracle_matrix_best_response(const game::GameSpec& game, int role,
                                      const std::vector<double>& q);

Candidate oracle_commitment_proposer(const game::GameSpec& game, int role,
                                     const lang::SourceText& opponent_source);

// ---- Foraging template search ----------------------------------------------

enum class TargetRule { kLowestIndex, kNearest };
enum class LoadRule { kWhenPartnerAdjacent, kWheneverAdjacent };
enum class MoveOrder { kUpDownLeftRight, kLeftRightUpDown };

struct ForageTemplate {
  TargetRule target = TargetRule::kLowestIndex;
  LoadRule load = LoadRule::kWhenPartnerAdjacent;
  MoveOrder order = MoveOrder::kUpDownLeftRight;
};

// All 8 templates in enumeration order.
std::vector<ForageTemplate> forage_template_grid();

std::string render_forage_template(const game::GameSpec& game, int role,
                                   const ForageTemplate& tmpl);

struct ForageSearchResult {
  std::vector<ForageTemplate> templates;
  std::vector<double> scores;  // mean ego return; -inf for invalid templates
  int best = 0;
  Candidate candidate;
};

ForageSearchResult forage_search(const game::GameSpec& game, int role,
                                 const lang::SourceText& opponent_source, int budget,
                                 int eval_episodes, std::uint64_t seed);

Candidate oracle_forage_search(const game::GameSpec& game, int role,
                               const lang::SourceText& opponent_source, int budget,
                               int eval_episodes, std::uint64_t seed);

// ---- LLM operator ------------------------------------------------------------

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  double temperature = 1.0;
  std::vector<ChatMessage> messages;
};

// Transport-level failure (connection, HTTP status, malformed response).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns choices[0].message.content.
  virtual std::string complete(const ChatRequest& request) = 0;
};

// POST {base_url}/chat/completions with a bearer token.
class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string base_url, std::string api_key, int timeout_s);
  std::string complete(const ChatRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
  int timeout_s_;
};

std::string chat_request_body(const ChatRequest& request);
std::string parse_chat_response(const std::string& body);

// Contents of the last complete ``` fenced block, or empty if none.
std::optional<std::string> extract_last_code_block(const std::string& reply);

std::vector<ChatMessage> build_prompt(const OperatorContext& ctx, bool repair);

Candidate llm_generate(const OperatorConfig& config, const OperatorContext& ctx,
                       ChatTransport& transport);
Candidate llm_generate(const OperatorConfig& config, const OperatorContext& ctx);

}  // namespace pibr::ops
