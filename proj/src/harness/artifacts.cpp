#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pibr/harness.hpp"

namespace pibr::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string csv_row(int step, std::size_t episode, double sw) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d,%zu,%.6f\n", step, episode, sw);
  return buf;
}

std::string profile_name(int step, int agent) {
  return "step_" + std::to_string(step) + "_agent" + std::to_string(agent) + ".pol";
}

std::string inner_profile_name(int step, int agent, int t) {
  return "step_" + std::to_string(step) + "_agent" + std::to_string(agent) + "_t" +
         std::to_string(t) + ".pol";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::kIoError, "write failed for " + path.string());
}

constexpr std::string_view kCsvHeader = "step,episode,sw\n";

}  // namespace

std::string run_log_line(const engine::ProfileRecord& record, bool timing) {
  const lang::SourceText& candidate = record.sources[record.acting_agent];
  ordered_json line;
  line["step"] = record.step;
  line["agent"] = record.acting_agent;
  line["candidate_hash"] = candidate.sha;
  line["candidate_file"] = "profiles/" + profile_name(record.step, record.acting_agent);
  line["unit_test_ok"] = record.unit_test_ok;
  if (record.sw) {
    line["per_episode_sw"] = record.sw->per_episode_sw;
    line["mean_sw"] = record.sw->mean_sw;
  } else {
    line["per_episode_sw"] = nullptr;
    line["mean_sw"] = nullptr;
  }
  line["wall_ms"] = timing ? record.wall_ms : 0;
  if (!record.eval_error.empty()) line["error"] = record.eval_error;
  return line.dump();
}

std::string plot_csv(const engine::RunHistory& history) {
  std::string csv(kCsvHeader);
  for (const engine::ProfileRecord& r : history.records) {
    if (!r.sw) continue;
    for (std::size_t e = 0; e < r.sw->per_episode_sw.size(); ++e) {
      csv += csv_row(r.step, e, r.sw->per_episode_sw[e]);
    }
  }
  return csv;
}

std::string plot_csv_from_log(const std::string& run_jsonl) {
  std::string csv(kCsvHeader);
  std::istringstream in(run_jsonl);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    const ordered_json record = ordered_json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("step") || !record.contains("per_episode_sw")) {
      throw Error(Errc::kIoError, "run log line " + std::to_string(line_no) + " is malformed");
    }
    const ordered_json& sws = record["per_episode_sw"];
    if (sws.is_null()) continue;
    const int step = record["step"].get<int>();
    for (std::size_t e = 0; e < sws.size(); ++e) csv += csv_row(step, e, sws[e].get<double>());
  }
  return csv;
}

ArtifactPaths write_run_artifacts(const engine::RunHistory& history, const fs::path& dir,
                                  bool timing) {
  std::error_code ec;
  fs::create_directories(dir / "profiles", ec);
  if (ec) throw Error(Errc::kIoError, "cannot create " + (dir / "profiles").string() + ": " + ec.message());

  ArtifactPaths paths;
  paths.run_log = dir / "run.jsonl";
  paths.plot_csv = dir / "plot.csv";
  paths.summary = dir / "summary.txt";

  std::string log;
  for (const engine::ProfileRecord& r : history.records) {
    log += run_log_line(r, timing) + "\n";
    const fs::path adopted = dir / "profiles" / profile_name(r.step, r.acting_agent);
    write_file(adopted, r.sources[r.acting_agent].text);
    paths.profiles.push_back(adopted);
    if (r.inner.candidates.size() > 1) {
      for (std::size_t t = 0; t < r.inner.candidates.size(); ++t) {
        const fs::path inner = dir / "profiles" /
                               inner_profile_name(r.step, r.acting_agent, static_cast<int>(t + 1));
        write_file(inner, r.inner.candidates[t].first.source.text);
        paths.profiles.push_back(inner);
      }
    }
  }
  write_file(paths.run_log, log);
  write_file(paths.plot_csv, plot_csv(history));

  const engine::ProfileRecord& best = history.records.at(history.best_index);
  char mean[64];
  std::snprintf(mean, sizeof(mean), "%.6f", best.sw->mean_sw);
  std::string summary;
  summary += "best_index = " + std::to_string(history.best_index) + "\n";
  summary += "best_step = " + std::to_string(best.step) + "\n";
  summary += std::string("best_mean_sw = ") + mean + "\n";
  for (int i = 0; i < game::kNumAgents; ++i) {
    summary += "\n--- agent " + std::to_string(i) + " policy (sha " + best.sources[i].sha +
               ") ---\n" + best.sources[i].text;
    if (!best.sources[i].text.empty() && best.sources[i].text.back() != '\n') summary += "\n";
  }
  write_file(paths.summary, summary);
  return paths;
}

}  // namespace pibr::harness
