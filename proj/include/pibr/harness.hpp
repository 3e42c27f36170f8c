#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pibr/pibr.hpp"

namespace pibr::harness {

struct Config {
  engine::RunSpec run;
  game::GameConfig game;
  std::string output_dir = "runs/latest";
  // Real wall times in run.jsonl; off keeps the log byte-reproducible.
  bool timing = false;
};

// Flat `dotted.key = value` format: strings quoted, numbers and booleans
// bare, integer lists as [a, b]. Throws MissingKey, TypeMismatch, UnknownKey
// and InvalidConfig, each naming the key.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

struct ArtifactPaths {
  std::filesystem::path run_log;
  std::filesystem::path plot_csv;
  std::filesystem::path summary;
  std::vector<std::filesystem::path> profiles;
};

ArtifactPaths write_run_artifacts(const engine::RunHistory& history,
                                  const std::filesystem::path& dir, bool timing = false);

std::string run_log_line(const engine::ProfileRecord& record, bool timing);

// CSV (header `step,episode,sw`) rebuilt from the lines of a run.jsonl file.
std::string plot_csv_from_log(const std::string& run_jsonl);
std::string plot_csv(const engine::RunHistory& history);

int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace pibr::harness
