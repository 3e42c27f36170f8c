#include <doctest.h>
#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <random>
#include <set>
#include <thread>

#include "pibr/operators.hpp"
#include "pibr/pibr.hpp"

using namespace pibr;
using namespace pibr::ops;

namespace {

game::GameSpec named(const std::string& name, std::optional<double> p = std::nullopt) {
  game::GameConfig c;
  c.name = name;
  c.p = p;
  return game::make_game(c);
}

// The action a constant one-hot policy plays.
int played_action(const game::GameSpec& g, const lang::SourceText& src) {
  const std::vector<double> d = opponent_mixed_strategy(g, src);
  for (int a = 0; a < g.n_actions; ++a) {
    if (d[a] == 1.0) return a;
  }
  return -1;
}

lang::SourceText onehot(int a) { return lang::make_source(constant_policy_source(3, a, "")); }

class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string complete(const ChatRequest& request) override {
    requests.push_back(request);
    if (calls_ >= replies_.size()) throw TransportError("script exhausted");
    const std::string reply = replies_[calls_++];
    if (reply == "!fail") throw TransportError("simulated outage");
    return reply;
  }

  std::vector<ChatRequest> requests;

 private:
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
};

OperatorConfig llm_config() {
  OperatorConfig c;
  c.kind = OperatorKind::kLLM;
  c.llm.base_url = "http://127.0.0.1:1/v1";
  c.llm.model = "test-model";
  c.llm.backoff_ms = 0;
  c.llm.timeout_s = 2;
  return c;
}

OperatorContext matrix_context(const game::GameSpec& g) {
  OperatorContext ctx;
  ctx.game = &g;
  ctx.role = 0;
  ctx.opponent_source = engine::initial_policy(g);
  ctx.grammar_doc = lang::grammar_doc();
  return ctx;
}

}  // namespace

TEST_CASE("expected payoffs by role") {
  const game::GameSpec g = named("climbing");
  const std::vector<double> uniform(3, 1.0 / 3);
  const auto u0 = expected_payoffs(g, 0, uniform);
  CHECK(u0[0] == doctest::Approx(-19.0 / 3));
  CHECK(u0[1] == doctest::Approx(-23.0 / 3));
  CHECK(u0[2] == doctest::Approx(11.0 / 3));
  // Agent 1 reads columns.
  const auto u1 = expected_payoffs(g, 1, {0, 0, 1});
  CHECK(u1 == std::array<double, 3>{0, 6, 5});
}

TEST_CASE("matrix best response: frozen cases") {
  const std::vector<double> uniform(3, 1.0 / 3);
  CHECK(played_action(named("vanilla"), oracle_matrix_best_response(named("vanilla"), 0, uniform).source) == 2);
  CHECK(played_action(named("climbing"), oracle_matrix_best_response(named("climbing"), 0, uniform).source) == 2);
  // Climbing chain: column BR to row 2 is 1, row BR to column 1 is 1.
  CHECK(played_action(named("climbing"), oracle_matrix_best_response(named("climbing"), 1, {0, 0, 1}).source) == 1);
  CHECK(played_action(named("climbing"), oracle_matrix_best_response(named("climbing"), 0, {0, 1, 0}).source) == 1);
  // Penalty p=-2 against uniform: rows 0 and 2 tie at 8/3, lowest index wins.
  const game::GameSpec pen = named("penalty", -2.0);
  CHECK(played_action(pen, oracle_matrix_best_response(pen, 0, uniform).source) == 0);
  CHECK(played_action(pen, oracle_matrix_best_response(pen, 1, {1, 0, 0}).source) == 2);
}

TEST_CASE("matrix best response matches brute force on random instances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> payoff(-20, 20);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    game::GameSpec g = named("vanilla");
    for (auto& row : g.matrix) {
      for (double& x : row) x = std::round(payoff(rng));
    }
    std::vector<double> q(3);
    double sum = 0;
    for (double& x : q) sum += (x = std::uniform_real_distribution<double>(0, 1)(rng));
    for (double& x : q) x /= sum;
    const int role = trial % 2;
    int best = 0;
    double best_u = -1e300;
    for (int a = 0; a < 3; ++a) {
      double u = 0;
      for (int b = 0; b < 3; ++b) u += (role == 0 ? g.matrix[a][b] : g.matrix[b][a]) * q[b];
      if (u > best_u) best_u = u, best = a;
    }
    if (played_action(g, oracle_matrix_best_response(g, role, q).source) != best) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("opponent strategy extraction") {
  const game::GameSpec g = named("vanilla");
  CHECK(opponent_mixed_strategy(g, onehot(1)) == std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(opponent_mixed_strategy(g, lang::make_source("(policy (h) (list 1")), Error);
  const std::vector<double> fallback =
      opponent_mixed_strategy_or_uniform(g, lang::make_source("(policy (h) 5)"));
  CHECK(fallback == std::vector<double>(3, 1.0 / 3));
}

TEST_CASE("commitment proposer") {
  const game::GameSpec climbing = named("climbing");
  const Candidate first = oracle_commitment_proposer(climbing, 0, engine::initial_policy(climbing));
  CHECK(played_action(climbing, first.source) == 0);
  CHECK(first.source.text.find("COMMIT 0") != std::string::npos);
  // Matching an opponent that already committed: no new COMMIT banner.
  const Candidate reply = oracle_commitment_proposer(climbing, 1, first.source);
  CHECK(played_action(climbing, reply.source) == 0);
  CHECK(reply.source.text.find("COMMIT") == std::string::npos);

  // Vanilla: diagonal max 3 is the global max.
  const game::GameSpec vanilla = named("vanilla");
  CHECK(played_action(vanilla, oracle_commitment_proposer(vanilla, 0, onehot(0)).source) == 2);

  // Penalty: the optimum is off the diagonal, so it acts as plain BR.
  const game::GameSpec pen = named("penalty", -2.0);
  const Candidate p = oracle_commitment_proposer(pen, 0, engine::initial_policy(pen));
  CHECK(p.source.text.find("COMMIT") == std::string::npos);
  CHECK(played_action(pen, p.source) == 0);
}

TEST_CASE("operator config resolution") {
  OperatorConfig c;
  c.kind = OperatorKind::kLLM;
  c.llm.model = "m";
  ::unsetenv("PIBR_LLM_BASE_URL");
  CHECK_THROWS_AS(resolve_operator_config(c), Error);
  ::setenv("PIBR_LLM_BASE_URL", "http://example.invalid/v1", 1);
  CHECK(resolve_operator_config(c).llm.base_url == "http://example.invalid/v1");
  ::unsetenv("PIBR_LLM_BASE_URL");
  c.llm.base_url = "http://x";
  c.llm.max_retries = 0;
  CHECK_THROWS_AS(resolve_operator_config(c), Error);
  OperatorConfig f;
  f.forage.template_budget = 0;
  CHECK_THROWS_AS(resolve_operator_config(f), Error);
  CHECK(operator_kind_name(OperatorKind::kOracleProposer) == "oracle_proposer");
}

TEST_CASE("forage templates") {
  const game::GameSpec g = named("foraging");
  const std::vector<ForageTemplate> grid = forage_template_grid();
  CHECK(grid.size() == 8);
  std::set<std::string> distinct;
  for (const ForageTemplate& t : grid) {
    for (int role = 0; role < 2; ++role) {
      const std::string src = render_forage_template(g, role, t);
      distinct.insert(src);
      const lang::ValidationReport r = lang::validate_source(g, lang::make_source(src));
      CHECK_MESSAGE(r.ok, (r.failure ? r.failure->message : ""));
    }
  }
  CHECK(distinct.size() == 16);
}

TEST_CASE("forage search is deterministic and picks the argmax") {
  const game::GameSpec g = named("foraging");
  const lang::SourceText uniform = engine::initial_policy(g);
  const ForageSearchResult a = forage_search(g, 0, uniform, 8, 4, 99);
  const ForageSearchResult b = forage_search(g, 0, uniform, 8, 4, 99);
  CHECK(a.scores == b.scores);
  CHECK(a.best == b.best);
  REQUIRE(a.scores.size() == 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(std::isfinite(a.scores[k]));
    CHECK(a.scores[k] <= a.scores[a.best]);
    if (k < a.best) CHECK(a.scores[k] < a.scores[a.best]);
  }
  CHECK(a.candidate.source.text == render_forage_template(g, 0, a.templates[a.best]));
  // A budget below the grid size only tries a prefix.
  CHECK(forage_search(g, 1, uniform, 3, 2, 1).scores.size() == 3);
}

TEST_CASE("code block extraction") {
  CHECK_FALSE(extract_last_code_block("no code here").has_value());
  CHECK(extract_last_code_block("```\n(policy (h) 1)\n```") == "(policy (h) 1)");
  CHECK(extract_last_code_block("a\n```lisp\nfirst\n```\nthen\n```scheme\nsecond\n```\n") ==
        "second");
  // An unterminated fence does not count.
  CHECK(extract_last_code_block("```\ndone\n```\n```\nopen") == "done");
}

TEST_CASE("chat wire format") {
  ChatRequest req{"m", 0.5, {{"system", "s"}, {"user", "u"}}};
  const nlohmann::json body = nlohmann::json::parse(chat_request_body(req));
  CHECK(body["model"] == "m");
  CHECK(body["temperature"] == 0.5);
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"] == "u");
  CHECK(parse_chat_response(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
  CHECK_THROWS_AS(parse_chat_response("not json"), TransportError);
  CHECK_THROWS_AS(parse_chat_response(R"({"choices":[]})"), TransportError);
}

TEST_CASE("prompt carries opponent source, feedback and role") {
  const game::GameSpec g = named("climbing");
  OperatorContext ctx = matrix_context(g);
  ctx.role = 1;
  ctx.t = 2;
  ctx.budget = 3;
  ctx.feedback_log.push_back(engine::failed_loss({lang::FailureKind::kParseError, "boom", 0}));
  const std::vector<ChatMessage> msgs = build_prompt(ctx, false);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].content.find("RULES") != std::string::npos);
  CHECK(msgs[0].content.find("column player") != std::string::npos);
  CHECK(msgs[1].content.find(ctx.opponent_source.text) != std::string::npos);
  CHECK(msgs[1].content.find("UNIT_TEST: FAIL kind=ParseError") != std::string::npos);
  CHECK(msgs[1].content.find("Inner step 2 of 3") != std::string::npos);
  CHECK(build_prompt(ctx, true)[1].content.find("no fenced code block") != std::string::npos);
}

TEST_CASE("llm operator with a scripted transport") {
  const game::GameSpec g = named("vanilla");
  const OperatorContext ctx = matrix_context(g);

  SUBCASE("first reply has code") {
    ScriptedTransport t({"Sure.\n```\n(policy (h) (list 0 0 1))\n```"});
    const Candidate c = llm_generate(llm_config(), ctx, t);
    CHECK(c.source.text == "(policy (h) (list 0 0 1))");
    CHECK(c.origin == CandidateOrigin::kLlm);
    CHECK(t.requests.size() == 1);
    CHECK(t.requests[0].model == "test-model");
  }
  SUBCASE("repair after a fence-less reply") {
    ScriptedTransport t({"I would play 2.", "```\n(policy (h) (list 0 0 1))\n```"});
    const Candidate c = llm_generate(llm_config(), ctx, t);
    CHECK(c.origin == CandidateOrigin::kLlmRepair);
    REQUIRE(t.requests.size() == 2);
    CHECK(t.requests[1].messages[1].content.find("no fenced code block") != std::string::npos);
  }
  SUBCASE("transient outage then success") {
    ScriptedTransport t({"!fail", "```\n(policy (h) (list 1 0 0))\n```"});
    CHECK(llm_generate(llm_config(), ctx, t).source.text == "(policy (h) (list 1 0 0))");
  }
  SUBCASE("never a code block") {
    ScriptedTransport t({"no", "still no", "nope"});
    try {
      llm_generate(llm_config(), ctx, t);
      FAIL("expected NoCodeBlock");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kNoCodeBlock);
    }
    CHECK(t.requests.size() == 3);
  }
  SUBCASE("endpoint down for every attempt") {
    ScriptedTransport t({"!fail", "!fail", "!fail", "!fail"});
    OperatorConfig c = llm_config();
    c.llm.max_retries = 2;
    try {
      llm_generate(c, ctx, t);
      FAIL("expected LlmUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kLlmUnavailable);
    }
    CHECK(t.requests.size() == 2);
  }
}

TEST_CASE("http transport against a local server") {
  httplib::Server server;
  std::string seen_auth;
  std::string seen_model;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_model = nlohmann::json::parse(req.body)["model"];
    const nlohmann::json reply = {
        {"choices", {{{"message", {{"role", "assistant"},
                                   {"content", "```\n(policy (h) (list 0 1 0))\n```"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/broken/chat/completions",
              [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpChatTransport transport(base + "/v1", "secret", 5);
  const std::string content = transport.complete({"m1", 1.0, {{"user", "hi"}}});
  CHECK(content.find("(list 0 1 0)") != std::string::npos);
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_model == "m1");

  HttpChatTransport broken(base + "/broken", "", 5);
  CHECK_THROWS_AS(broken.complete({"m", 1.0, {{"user", "hi"}}}), TransportError);

  const game::GameSpec g = named("vanilla");
  OperatorConfig c = llm_config();
  c.llm.base_url = base + "/v1";
  const Candidate cand = llm_generate(c, matrix_context(g));
  CHECK(cand.source.text == "(policy (h) (list 0 1 0))");

  server.stop();
  serving.join();
}

TEST_CASE("unreachable endpoint surfaces LlmUnavailable") {
  const game::GameSpec g = named("vanilla");
  OperatorConfig c = llm_config();
  c.llm.max_retries = 2;
  try {
    llm_generate(c, matrix_context(g));
    FAIL("expected LlmUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kLlmUnavailable);
  }
}
