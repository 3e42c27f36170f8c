#include <cstdio>
#include <numeric>

#include "pibr/loss.hpp"

namespace pibr::engine {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string one_line(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      out.push_back(' ');
    } else if (c == '"') {
      out.push_back('\'');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string render_episode(int index, const EpisodeFeedback& ep) {
  std::string out = "EP " + std::to_string(index) + ": SW=" + fixed6(ep.sw) + "\n";
  const auto& h = ep.trajectory.history;
  for (std::size_t t = 0; t < h.actions.size(); ++t) {
    out += "  t=" + std::to_string(t) + " s=[";
    for (std::size_t k = 0; k < h.states[t].size(); ++k) {
      if (k) out += ",";
      out += fixed6(h.states[t][k]);
    }
    out += "] a=[" + std::to_string(h.actions[t][0]) + "," + std::to_string(h.actions[t][1]) +
           "] r=[" + fixed6(ep.trajectory.rewards[t][0]) + "," +
           fixed6(ep.trajectory.rewards[t][1]) + "]\n";
  }
  return out;
}

}  // namespace

std::string render_loss(const LossRecord& loss) {
  std::string out;
  if (loss.unit_test) {
    out += "UNIT_TEST: FAIL kind=" + std::string(lang::failure_kind_name(loss.unit_test->kind)) +
           " probe=" + std::to_string(loss.unit_test->probe_index) + " msg=\"" +
           one_line(loss.unit_test->message) + "\"\n";
  } else {
    out += "UNIT_TEST: PASS\n";
  }
  if (loss.utility) {
    out += "UTILITY: mean_return=" + fixed6(loss.utility->mean_return) +
           " episodes=" + std::to_string(loss.utility->per_episode.size()) + "\n";
    for (std::size_t e = 0; e < loss.utility->per_episode.size(); ++e) {
      out += render_episode(static_cast<int>(e), loss.utility->per_episode[e]);
    }
  }
  return out;
}

LossRecord failed_loss(lang::ValidationFailure failure) {
  LossRecord loss;
  loss.unit_test = std::move(failure);
  loss.rendered = render_loss(loss);
  return loss;
}

LossRecord passed_loss(std::vector<game::Trajectory> trajectories, int ego) {
  UtilityFeedback utility;
  double total = 0.0;
  for (std::size_t e = 0; e < trajectories.size(); ++e) {
    EpisodeFeedback ep;
    ep.returns = trajectories[e].returns;
    ep.sw = ep.returns[0] + ep.returns[1];
    ep.trajectory = std::move(trajectories[e]);
    ep.digest = lang::make_source(render_episode(static_cast<int>(e), ep)).sha.substr(0, 16);
    total += ep.returns[ego];
    utility.per_episode.push_back(std::move(ep));
  }
  utility.mean_return = utility.per_episode.empty() ? 0.0 : total / utility.per_episode.size();
  LossRecord loss;
  loss.utility = std::move(utility);
  loss.rendered = render_loss(loss);
  return loss;
}

}  // namespace pibr::engine
