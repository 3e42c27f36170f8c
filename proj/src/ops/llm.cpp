#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <thread>

#include "pibr/operators.hpp"

namespace pibr::ops {
namespace {

using nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const std::size_t path_start = url.find('/', host_start);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::string role_description(const game::GameSpec& game, int role) {
  if (game.kind == game::GameKind::kMatrix) {
    return role == 0 ? "You are agent 0, the row player." : "You are agent 1, the column player.";
  }
  return "You are agent " + std::to_string(role) + "; your (row, col, level) triple is the " +
         (role == 0 ? std::string("first") : std::string("second")) +
         " agent triple in the state.";
}

}  // namespace

HttpChatTransport::HttpChatTransport(std::string base_url, std::string api_key, int timeout_s)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {}

std::string chat_request_body(const ChatRequest& request) {
  json messages = json::array();
  for (const ChatMessage& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return json{{"model", request.model},
              {"temperature", request.temperature},
              {"messages", messages}}
      .dump();
}

std::string parse_chat_response(const std::string& body) {
  const json reply = json::parse(body, nullptr, false);
  if (reply.is_discarded()) throw TransportError("response is not JSON");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat response: ") + e.what());
  }
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  const SplitUrl url = split_url(base_url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto response = client.Post(url.path + "/chat/completions", headers,
                              chat_request_body(request), "application/json");
  if (!response) {
    throw TransportError("request to " + base_url_ + " failed: " +
                         httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw TransportError("HTTP " + std::to_string(response->status) + " from " + base_url_);
  }
  return parse_chat_response(response->body);
}

std::optional<std::string> extract_last_code_block(const std::string& reply) {
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = reply.find("```", pos);
    if (open == std::string::npos) break;
    // The info string (e.g. ```lisp) runs to the end of the opening line.
    const std::size_t line_end = reply.find('\n', open + 3);
    if (line_end == std::string::npos) break;
    const std::size_t close = reply.find("```", line_end + 1);
    if (close == std::string::npos) break;
    std::string body = reply.substr(line_end + 1, close - line_end - 1);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    last = body;
    pos = close + 3;
  }
  return last;
}

std::vector<ChatMessage> build_prompt(const OperatorContext& ctx, bool repair) {
  const game::GameSpec& game = *ctx.game;
  std::string system = ctx.grammar_doc.empty() ? lang::grammar_doc() : ctx.grammar_doc;
  system += "\nGAME\n" + game::describe(game) + "\n";
  system += "\nROLE\n" + role_description(game, ctx.role) + "\n";
  system +=
      "\nRULES\nYou act as a best-response operator: given your opponent's policy source "
      "code, write the policy that maximizes your expected return against it. Your policy "
      "must return a list of " +
      std::to_string(game.n_actions) +
      " probabilities. Comments in the source are visible to the other agent when it "
      "responds to you. Reply with the complete program inside one fenced code block.\n";

  std::string user = "OPPONENT POLICY (agent " + std::to_string(1 - ctx.role) + ")\n```\n" +
                     ctx.opponent_source.text + "\n```\n";
  if (!ctx.feedback_log.empty()) {
    user += "\nFEEDBACK ON YOUR PREVIOUS CANDIDATES (most recent last)\n";
    for (std::size_t i = 0; i < ctx.feedback_log.size(); ++i) {
      user += "--- candidate " + std::to_string(i + 1) + " ---\n" + ctx.feedback_log[i].rendered;
    }
  }
  user += "\nTASK\nInner step " + std::to_string(ctx.t) + " of " + std::to_string(ctx.budget) +
          ". Write your best-response policy as agent " + std::to_string(ctx.role) + ".\n";
  if (repair) {
    user += "Your previous reply contained no fenced code block. Reply with only one fenced "
            "code block containing the complete policy program.\n";
  }
  return {{"system", system}, {"user", user}};
}

Candidate llm_generate(const OperatorConfig& config, const OperatorContext& ctx,
                       ChatTransport& transport) {
  const int attempts = std::max(1, config.llm.max_retries);
  bool repair = false;
  std::string last_error;
  int delay_ms = config.llm.backoff_ms;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
    ChatRequest request{config.llm.model, config.llm.temperature, build_prompt(ctx, repair)};
    std::string reply;
    try {
      reply = transport.complete(request);
    } catch (const TransportError& e) {
      spdlog::warn("llm attempt {}/{} failed: {}", attempt + 1, attempts, e.what());
      last_error = e.what();
      repair = false;
      continue;
    }
    if (std::optional<std::string> code = extract_last_code_block(reply)) {
      return {lang::make_source(*code),
              repair ? CandidateOrigin::kLlmRepair : CandidateOrigin::kLlm};
    }
    spdlog::warn("llm attempt {}/{}: reply has no fenced code block", attempt + 1, attempts);
    last_error.clear();
    repair = true;
  }
  if (repair) {
    throw Error(Errc::kNoCodeBlock,
                "no fenced code block after " + std::to_string(attempts) + " attempt(s)");
  }
  throw Error(Errc::kLlmUnavailable, "LLM endpoint unavailable after " +
                                         std::to_string(attempts) + " attempt(s): " + last_error);
}

Candidate llm_generate(const OperatorConfig& config, const OperatorContext& ctx) {
  const OperatorConfig resolved = resolve_operator_config(config);
  const char* key = std::getenv("PIBR_LLM_API_KEY");
  HttpChatTransport transport(resolved.llm.base_url, key ? key : "", resolved.llm.timeout_s);
  return llm_generate(resolved, ctx, transport);
}

}  // namespace pibr::ops
