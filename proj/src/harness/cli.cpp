#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pibr/harness.hpp"
#include "pibr/modal.hpp"

namespace pibr::harness {
namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailure = 2;

// Errors that mean the invocation itself was wrong.
bool is_usage_error(Errc code) {
  switch (code) {
    case Errc::kMissingKey:
    case Errc::kTypeMismatch:
    case Errc::kUnknownKey:
    case Errc::kInvalidConfig:
    case Errc::kInvalidOperatorConfig:
    case Errc::kUnknownGame:
    case Errc::kPenaltyParamNonNegative:
    case Errc::kInvalidGame:
    case Errc::kUnknownAgent:
    case Errc::kInvalidPayoffs:
      return true;
    default:
      return false;
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
  Config config;
  try {
    config = load_config(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
    return kUsage;
  }
  if (seed) config.run.settings.seed = *seed;
  if (!out_dir.empty()) config.output_dir = out_dir;
  const engine::RunHistory history = engine::pibr_run(config.run);
  write_run_artifacts(history, config.output_dir, config.timing);
  const engine::ProfileRecord& best = engine::select_best_profile(history);
  std::printf("best step %d mean SW %.6f -> %s\n", best.step, best.sw->mean_sw,
              config.output_dir.c_str());
  return kOk;
}

int cmd_validate(const std::string& game_name, std::optional<double> p,
                 const std::string& policy_path) {
  game::GameConfig gc;
  gc.name = game_name;
  gc.p = p;
  const game::GameSpec game = game::make_game(gc);
  const lang::SourceText source = lang::make_source(read_text(policy_path));
  const lang::ValidationReport report = lang::validate_source(game, source);
  if (report.ok) {
    std::printf("PASS\n");
    return kOk;
  }
  const lang::ValidationFailure& f = *report.failure;
  std::printf("FAIL kind=%s probe=%d msg=\"%s\"\n",
              std::string(lang::failure_kind_name(f.kind)).c_str(), f.probe_index,
              f.message.c_str());
  return kFailure;
}

int cmd_modal(const std::string& pair, const std::string& family_path, bool nash) {
  const std::vector<modal::ModalAgent> family =
      family_path.empty() ? modal::bundled_family() : modal::load_agent_file(family_path);
  const std::size_t comma = pair.find(',');
  if (comma == std::string::npos) {
    std::cerr << "error: --pair expects A,B\n";
    return kUsage;
  }
  const modal::ModalAgent& a = modal::find_agent(family, pair.substr(0, comma));
  const modal::ModalAgent& b = modal::find_agent(family, pair.substr(comma + 1));
  const modal::OutcomeReport out = modal::evaluate_pair(a, b);
  std::printf("%c %c\n", modal::move_char(out.actions[0]), modal::move_char(out.actions[1]));
  if (nash) {
    const modal::NashReport report = modal::nash_check(family, {a, b});
    for (const modal::Deviation& d : report.deviations) {
      std::printf("seat %d deviator %s: %g vs %g%s\n", d.seat, d.deviator.c_str(),
                  d.deviation_payoff, d.profile_payoff, d.profitable ? " PROFITABLE" : "");
    }
    std::printf("%s\n", report.is_nash ? "NASH" : "NOT NASH");
  }
  return kOk;
}

int cmd_plotdata(const std::string& run_dir, const std::string& out_path) {
  const std::string csv = plot_csv_from_log(read_text(run_dir + "/run.jsonl"));
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << csv)) throw Error(Errc::kIoError, "cannot write " + out_path);
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Programmatic iterated best response lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  CLI::App* run = app.add_subcommand("run", "Run PIBR from a config file and write artifacts");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override pibr.seed");
  run->add_option("--out", out_dir, "Override output.dir");

  std::string game_name;
  std::optional<double> p;
  std::string policy_path;
  CLI::App* validate = app.add_subcommand("validate", "Validate a policy file against a game");
  validate->add_option("--game", game_name, "vanilla, climbing, penalty or foraging")->required();
  validate->add_option("--p", p, "Penalty parameter (penalty game)");
  validate->add_option("--policy", policy_path, "Policy source file")->required();

  std::string pair;
  std::string family_path;
  bool nash = false;
  CLI::App* modal_cmd = app.add_subcommand("modal", "Evaluate a pair of modal agents");
  modal_cmd->add_option("--pair", pair, "Agent names A,B")->required();
  modal_cmd->add_option("--family", family_path, "Agent definition file");
  modal_cmd->add_flag("--nash", nash, "Check the pair against deviations from the family");

  std::string run_dir;
  std::string plot_out;
  CLI::App* plotdata = app.add_subcommand("plotdata", "Rebuild plot CSV from a run log");
  plotdata->add_option("--run", run_dir, "Run directory")->required();
  plotdata->add_option("--out", plot_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out_dir);
    if (*validate) return cmd_validate(game_name, p, policy_path);
    if (*modal_cmd) return cmd_modal(pair, family_path, nash);
    if (*plotdata) return cmd_plotdata(run_dir, plot_out);
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
    return is_usage_error(e.code()) ? kUsage : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "pibr");
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(storage.size()), argv.data());
}

}  // namespace pibr::harness
