#include <doctest.h>
#include <openssl/evp.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pibr/harness.hpp"

using namespace pibr;
using namespace pibr::harness;
namespace fs = std::filesystem;

namespace {

const char* kVanilla =
    "game.kind = \"vanilla\"\n"
    "operator0.kind = \"oracle_br\"\n"
    "operator1.kind = \"oracle_br\"\n";

Errc config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("config was accepted: " << text);
  return Errc::kInvalidConfig;
}

std::string config_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pibr_test_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string(PIBR_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[512];
  while (std::fgets(buf, sizeof(buf), pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

engine::RunHistory vanilla_history(int k, int e) {
  Config c = parse_config(std::string(kVanilla) + "pibr.K = " + std::to_string(k) +
                          "\npibr.E = " + std::to_string(e) + "\n");
  return engine::pibr_run(c.run);
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse_config(
      "# comment line\n"
      "game.kind = \"foraging\"   # trailing comment\n"
      "game.agent_levels = [1, 2]\n"
      "game.t_max = 30\n"
      "pibr.K = 6\npibr.T = 2\npibr.E = 3\npibr.seed = 42\npibr.inner_return = \"best\"\n"
      "operator0.kind = \"oracle_forage\"\n"
      "operator0.forage.template_budget = 4\n"
      "operator1.kind = \"llm\"\n"
      "operator1.llm.model = \"m#1\"\n"
      "operator1.llm.temperature = 0.25\n"
      "output.dir = \"out/x\"\noutput.timing = true\n");
  CHECK(c.run.game.kind == game::GameKind::kForaging);
  CHECK(c.run.game.agent_levels == std::array<int, 2>{1, 2});
  CHECK(c.run.game.t_max == 30);
  CHECK(c.run.settings.outer_steps == 6);
  CHECK(c.run.settings.inner_steps == 2);
  CHECK(c.run.settings.eval_episodes == 3);
  CHECK(c.run.settings.seed == 42);
  CHECK(c.run.settings.inner_return == engine::InnerReturn::kBest);
  CHECK(c.run.operators[0].kind == ops::OperatorKind::kOracleForage);
  CHECK(c.run.operators[0].forage.template_budget == 4);
  CHECK(c.run.operators[1].kind == ops::OperatorKind::kLLM);
  CHECK(c.run.operators[1].llm.model == "m#1");
  CHECK(c.run.operators[1].llm.temperature == 0.25);
  CHECK(c.output_dir == "out/x");
  CHECK(c.timing);

  const Config d = parse_config(kVanilla);
  CHECK(d.run.settings.outer_steps == 4);
  CHECK(d.run.settings.inner_steps == 1);
  CHECK(d.run.settings.eval_episodes == 10);
  CHECK(d.output_dir == "runs/latest");
  CHECK_FALSE(d.timing);
}

TEST_CASE("config errors name the key") {
  CHECK(config_error("operator0.kind = \"oracle_br\"\noperator1.kind = \"oracle_br\"\n") ==
        Errc::kMissingKey);
  CHECK(config_message("operator0.kind = \"oracle_br\"\noperator1.kind = \"oracle_br\"\n")
            .find("game.kind") != std::string::npos);

  const std::string penalty =
      "game.kind = \"penalty\"\noperator0.kind = \"oracle_br\"\noperator1.kind = \"oracle_br\"\n";
  CHECK(config_error(penalty) == Errc::kMissingKey);
  CHECK(config_message(penalty).find("game.p") != std::string::npos);
  CHECK(config_error(penalty + "game.p = 3\n") == Errc::kPenaltyParamNonNegative);
  CHECK_NOTHROW(parse_config(penalty + "game.p = -50\n"));

  CHECK(config_error(std::string(kVanilla) + "pibr.K = \"four\"\n") == Errc::kTypeMismatch);
  CHECK(config_message(std::string(kVanilla) + "pibr.K = \"four\"\n").find("pibr.K") !=
        std::string::npos);
  CHECK(config_error(std::string(kVanilla) + "pibr.K = 2.5\n") == Errc::kTypeMismatch);
  CHECK(config_error(std::string(kVanilla) + "output.timing = 1\n") == Errc::kTypeMismatch);
  CHECK(config_error(std::string(kVanilla) + "game.agent_levels = [1]\n") == Errc::kTypeMismatch);
  CHECK(config_error(std::string(kVanilla) + "pibr.k = 4\n") == Errc::kUnknownKey);
  CHECK(config_message(std::string(kVanilla) + "pibr.k = 4\n").find("pibr.k") !=
        std::string::npos);
  CHECK(config_error(std::string(kVanilla) + "pibr.K = 0\n") == Errc::kInvalidConfig);
  CHECK(config_error(std::string(kVanilla) + "pibr.K = 1\npibr.K = 2\n") == Errc::kInvalidConfig);
  CHECK(config_error(std::string(kVanilla) + "just words\n") == Errc::kInvalidConfig);
  CHECK(config_error("game.kind = \"chess\"\noperator0.kind = \"oracle_br\"\n"
                     "operator1.kind = \"oracle_br\"\n") == Errc::kUnknownGame);
  CHECK(config_error("game.kind = \"vanilla\"\noperator0.kind = \"oracle_brr\"\n"
                     "operator1.kind = \"oracle_br\"\n") == Errc::kInvalidConfig);
  CHECK(config_error(std::string(kVanilla) + "pibr.inner_return = \"first\"\n") ==
        Errc::kInvalidConfig);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"vanilla_br", "climbing_br", "climbing_proposer", "penalty_br",
                           "foraging_forage"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(PIBR_SOURCE_DIR) + "/configs/" + name + ".cfg"));
  }
}

TEST_CASE("run artifacts") {
  const engine::RunHistory h = vanilla_history(2, 5);
  const fs::path dir = scratch("artifacts");
  const ArtifactPaths paths = write_run_artifacts(h, dir);

  // Step 1 pairs action 2 with a uniform partner; step 2 is (2,2) every episode.
  const std::string csv = slurp(paths.plot_csv);
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "step,episode,sw");
  int n = 0;
  int step2 = 0;
  while (std::getline(rows, line)) {
    ++n;
    if (line.rfind("2,", 0) == 0) {
      CHECK(line == "2," + std::to_string(step2) + ",6.000000");
      ++step2;
    }
  }
  CHECK(n == 10);
  CHECK(step2 == 5);

  std::istringstream log(slurp(paths.run_log));
  int records = 0;
  while (std::getline(log, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    ++records;
    CHECK(j["step"] == records);
    CHECK(j["agent"] == records - 1);
    CHECK(j["unit_test_ok"] == true);
    CHECK(j["wall_ms"] == 0);
    CHECK(j["per_episode_sw"].size() == 5);
    // The hash is the SHA-256 of the file the record points to.
    const std::string text = slurp(dir / j["candidate_file"].get<std::string>());
    CHECK_FALSE(text.empty());
    CHECK(j["candidate_hash"] == sha256_hex(text));
  }
  CHECK(records == 2);
  CHECK(slurp(paths.run_log).rfind("{\"step\":1,\"agent\":0,\"candidate_hash\":", 0) == 0);

  const std::string summary = slurp(paths.summary);
  CHECK(summary.find("best_index = 1\n") != std::string::npos);
  CHECK(summary.find("best_step = 2\n") != std::string::npos);
  CHECK(summary.find("best_mean_sw = 6.000000\n") != std::string::npos);
  CHECK(summary.find(h.records[1].sources[0].text) != std::string::npos);
  CHECK(summary.find(h.records[1].sources[1].text) != std::string::npos);

  // Byte-identical on a rerun with timing off.
  const fs::path again = scratch("artifacts_again");
  write_run_artifacts(vanilla_history(2, 5), again);
  CHECK(slurp(again / "run.jsonl") == slurp(paths.run_log));
  CHECK(slurp(again / "plot.csv") == csv);

  CHECK(plot_csv_from_log(slurp(paths.run_log)) == csv);
  CHECK(plot_csv(h) == csv);
}

TEST_CASE("inner candidates and failures in the log") {
  engine::RunHistory h = vanilla_history(2, 3);
  h.records[0].unit_test_ok = false;
  h.records[0].sw.reset();
  h.records[0].eval_error = "candidate failed its unit test";
  const nlohmann::json j = nlohmann::json::parse(run_log_line(h.records[0], false));
  CHECK(j["per_episode_sw"].is_null());
  CHECK(j["mean_sw"].is_null());
  CHECK(j["error"] == "candidate failed its unit test");
  CHECK_FALSE(nlohmann::json::parse(run_log_line(h.records[1], false)).contains("error"));
  // Null rows are skipped in the plot data.
  CHECK(plot_csv(h) == "step,episode,sw\n2,0,6.000000\n2,1,6.000000\n2,2,6.000000\n");

  Config c = parse_config(std::string(kVanilla) + "pibr.K = 1\npibr.T = 3\n");
  const fs::path dir = scratch("inner");
  const ArtifactPaths paths = write_run_artifacts(engine::pibr_run(c.run), dir);
  CHECK(paths.profiles.size() == 4);
  for (int t = 1; t <= 3; ++t) {
    CHECK(fs::exists(dir / "profiles" / ("step_1_agent0_t" + std::to_string(t) + ".pol")));
  }
}

TEST_CASE("plot data rejects malformed logs") {
  CHECK_THROWS_AS(plot_csv_from_log("{not json}\n"), Error);
  CHECK_THROWS_AS(plot_csv_from_log("{\"step\":1}\n"), Error);
  CHECK(plot_csv_from_log("") == "step,episode,sw\n");
}

TEST_CASE("cli") {
  const fs::path dir = scratch("cli");
  const std::string cfg = std::string(PIBR_SOURCE_DIR) + "/configs/vanilla_br.cfg";

  SUBCASE("run and plotdata") {
    const CliResult r = cli("run --config " + cfg + " --out " + (dir / "run").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("best step 2 mean SW 6.000000") != std::string::npos);
    CHECK(fs::exists(dir / "run" / "run.jsonl"));
    const CliResult p = cli("plotdata --run " + (dir / "run").string() + " --out " +
                            (dir / "rebuilt.csv").string());
    CHECK(p.code == 0);
    CHECK(slurp(dir / "rebuilt.csv") == slurp(dir / "run" / "plot.csv"));
    CHECK(cli("plotdata --run " + (dir / "missing").string() + " --out x.csv").code == 2);
  }
  SUBCASE("seed override changes the log") {
    CHECK(cli("run --config " + cfg + " --seed 0 --out " + (dir / "s0").string()).code == 0);
    CHECK(cli("run --config " + cfg + " --seed 9 --out " + (dir / "s9").string()).code == 0);
    CHECK(slurp(dir / "s0" / "run.jsonl") != slurp(dir / "s9" / "run.jsonl"));
  }
  SUBCASE("usage and config errors exit 1") {
    CHECK(cli("").code == 1);
    CHECK(cli("run").code == 1);
    CHECK(cli("frobnicate").code == 1);
    std::ofstream(dir / "bad.cfg") << "game.kind = \"vanilla\"\n";
    CHECK(cli("run --config " + (dir / "bad.cfg").string()).code == 1);
    CHECK(cli("validate --game chess --policy " + (dir / "bad.cfg").string()).code == 1);
    CHECK(cli("modal --pair FB").code == 1);
    CHECK(cli("modal --pair FB,XX").code == 1);
  }
  SUBCASE("validate") {
    std::ofstream(dir / "good.pol") << "(policy (h) (list 0 0 1))\n";
    std::ofstream(dir / "bad.pol") << "(policy (h) (list 0 1))\n";
    const CliResult good = cli("validate --game vanilla --policy " + (dir / "good.pol").string());
    CHECK(good.code == 0);
    CHECK(good.out == "PASS\n");
    const CliResult bad = cli("validate --game climbing --policy " + (dir / "bad.pol").string());
    CHECK(bad.code == 2);
    CHECK(bad.out.rfind("FAIL kind=", 0) == 0);
    CHECK(bad.out.find("probe=0") != std::string::npos);
    CHECK(cli("validate --game penalty --p -4 --policy " + (dir / "good.pol").string()).code == 0);
    CHECK(cli("validate --game penalty --policy " + (dir / "good.pol").string()).code == 1);
  }
  SUBCASE("modal") {
    CHECK(cli("modal --pair FB,DB").out == "D D\n");
    CHECK(cli("modal --pair FB,FB").out == "C C\n");
    const CliResult nash = cli("modal --pair CB,CB --nash");
    CHECK(nash.code == 0);
    CHECK(nash.out.find("NOT NASH") != std::string::npos);
    CHECK(nash.out.find("deviator DB: 5 vs 3 PROFITABLE") != std::string::npos);
    std::ofstream(dir / "family.modal") << "TFT = (box opp)\nSUSP = (and (box opp) (not (box bot)))\n";
    const CliResult fam =
        cli("modal --pair TFT,SUSP --family " + (dir / "family.modal").string());
    CHECK(fam.code == 0);
    CHECK(fam.out == "D D\n");
  }
}
