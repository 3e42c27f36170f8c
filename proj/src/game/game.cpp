#include "pibr/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pibr/error.hpp"
#include "pibr/random.hpp"

namespace pibr::game {
namespace {

constexpr int kMaxSpawnAttempts = 10000;

GameSpec matrix_game(std::string name, const Payoffs& payoffs,
                     const GameConfig& config) {
  GameSpec spec;
  spec.kind = GameKind::kMatrix;
  spec.name = std::move(name);
  spec.matrix = payoffs;
  spec.n_actions = kMatrixActions;
  spec.rounds_per_episode = config.rounds.value_or(1);
  if (spec.rounds_per_episode < 1) {
    throw Error(Errc::kInvalidGame, "rounds_per_episode must be >= 1");
  }
  return spec;
}

GameSpec foraging_game(const GameConfig& config) {
  GameSpec spec;
  spec.kind = GameKind::kForaging;
  spec.name = "foraging";
  spec.n_actions = kForageActions;
  spec.grid_rows = config.grid_rows.value_or(5);
  spec.grid_cols = config.grid_cols.value_or(5);
  spec.n_foods = config.n_foods.value_or(2);
  spec.agent_levels = config.agent_levels.value_or(std::array<int, 2>{1, 1});
  spec.t_max = config.t_max.value_or(50);
  spec.penalty_lambda = config.penalty_lambda.value_or(0.2);
  if (spec.grid_rows < 3 || spec.grid_cols < 3) {
    throw Error(Errc::kInvalidGame, "grid dimensions must be >= 3");
  }
  if (spec.n_foods < 1) throw Error(Errc::kInvalidGame, "n_foods must be >= 1");
  if (spec.t_max < 1) throw Error(Errc::kInvalidGame, "t_max must be >= 1");
  if (spec.agent_levels[0] < 1 || spec.agent_levels[1] < 1) {
    throw Error(Errc::kInvalidGame, "agent levels must be >= 1");
  }
  if (!(spec.penalty_lambda >= 0.0) || !std::isfinite(spec.penalty_lambda)) {
    throw Error(Errc::kInvalidGame, "penalty_lambda must be a finite value >= 0");
  }
  return spec;
}

bool adjacent(int r1, int c1, int r2, int c2) {
  return std::abs(r1 - r2) + std::abs(c1 - c2) == 1;
}

bool in_grid(const GameSpec& game, int row, int col) {
  return row >= 0 && row < game.grid_rows && col >= 0 && col < game.grid_cols;
}

bool food_at(const WorldState& state, int row, int col) {
  return std::any_of(state.foods.begin(), state.foods.end(), [&](const FoodSlot& f) {
    return f.alive && f.row == row && f.col == col;
  });
}

// Row/column deltas indexed by ForageAction.
constexpr std::array<int, kForageActions> kRowDelta{0, -1, 1, 0, 0, 0};
constexpr std::array<int, kForageActions> kColDelta{0, 0, 0, -1, 1, 0};

void check_actions(const GameSpec& game, const JointAction& joint_action) {
  for (int i = 0; i < kNumAgents; ++i) {
    if (joint_action[i] < 0 || joint_action[i] >= game.n_actions) {
      throw Error(Errc::kActionOutOfRange,
                  "agent " + std::to_string(i) + " action " +
                      std::to_string(joint_action[i]) + " outside [0, " +
                      std::to_string(game.n_actions) + ")");
    }
  }
}

StepResult step_matrix(const GameSpec& game, const WorldState& state,
                       const JointAction& joint_action) {
  StepResult result;
  result.state = state;
  const double payoff = game.matrix[joint_action[0]][joint_action[1]];
  result.rewards = {payoff, payoff};
  result.state.round_index = state.round_index + 1;
  result.state.step_index = state.step_index + 1;
  result.done = result.state.round_index >= game.rounds_per_episode;
  result.state.done = result.done;
  return result;
}

// Conflicted movers stay put: out of grid, into food, same destination,
// swaps, and moves into a cell held by an agent that ends up not moving.
void resolve_movement(const GameSpec& game, WorldState& next,
                      const JointAction& joint_action) {
  std::array<bool, kNumAgents> moving{};
  std::array<int, kNumAgents> dest_row{};
  std::array<int, kNumAgents> dest_col{};
  for (int i = 0; i < kNumAgents; ++i) {
    const int a = joint_action[i];
    const auto& agent = next.agents[i];
    dest_row[i] = agent.row + kRowDelta[a];
    dest_col[i] = agent.col + kColDelta[a];
    moving[i] = a >= kMoveUp && a <= kMoveRight &&
                in_grid(game, dest_row[i], dest_col[i]) &&
                !food_at(next, dest_row[i], dest_col[i]);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < kNumAgents; ++i) {
      if (!moving[i]) continue;
      for (int j = 0; j < kNumAgents; ++j) {
        if (i == j) continue;
        const auto& other = next.agents[j];
        bool blocked = false;
        if (moving[j]) {
          const bool same_dest = dest_row[i] == dest_row[j] && dest_col[i] == dest_col[j];
          const bool swap = dest_row[i] == other.row && dest_col[i] == other.col &&
                            dest_row[j] == next.agents[i].row &&
                            dest_col[j] == next.agents[i].col;
          blocked = same_dest || swap;
        } else {
          blocked = dest_row[i] == other.row && dest_col[i] == other.col;
        }
        if (blocked) {
          moving[i] = false;
          if (moving[j] && dest_row[i] == dest_row[j] && dest_col[i] == dest_col[j]) {
            moving[j] = false;
          }
          changed = true;
          break;
        }
      }
    }
  }
  for (int i = 0; i < kNumAgents; ++i) {
    if (moving[i]) {
      next.agents[i].row = dest_row[i];
      next.agents[i].col = dest_col[i];
    }
  }
}

StepResult step_foraging(const GameSpec& game, const WorldState& state,
                         const JointAction& joint_action) {
  StepResult result;
  result.state = state;
  WorldState& next = result.state;
  resolve_movement(game, next, joint_action);

  double total_food_level = 0.0;
  for (const auto& f : state.foods) total_food_level += f.level;

  for (auto& food : next.foods) {
    if (!food.alive) continue;
    int loader_level_sum = 0;
    std::array<bool, kNumAgents> loading{};
    for (int i = 0; i < kNumAgents; ++i) {
      const auto& agent = next.agents[i];
      loading[i] = joint_action[i] == kLoadFood &&
                   adjacent(agent.row, agent.col, food.row, food.col);
      if (loading[i]) loader_level_sum += agent.level;
    }
    if (loader_level_sum == 0 || loader_level_sum < food.level) continue;
    food.alive = false;
    for (int i = 0; i < kNumAgents; ++i) {
      if (!loading[i]) continue;
      result.rewards[i] += (static_cast<double>(food.level) * next.agents[i].level) /
                           (static_cast<double>(loader_level_sum) * total_food_level);
    }
  }

  next.step_index = state.step_index + 1;
  const bool all_collected = std::none_of(next.foods.begin(), next.foods.end(),
                                          [](const FoodSlot& f) { return f.alive; });
  result.done = all_collected || next.step_index >= game.t_max;
  next.done = result.done;
  if (result.done) {
    const double penalty =
        game.penalty_lambda * static_cast<double>(next.step_index) / game.t_max;
    for (auto& r : result.rewards) r -= penalty;
  }
  return result;
}

}  // namespace

GameSpec make_game(const GameConfig& config) {
  if (config.name == "vanilla") {
    return matrix_game("vanilla", {{{2, 0, 0}, {0, 1, 0}, {0, 0, 3}}}, config);
  }
  if (config.name == "climbing") {
    return matrix_game("climbing", {{{11, -30, 0}, {-30, 7, 0}, {0, 6, 5}}}, config);
  }
  if (config.name == "penalty") {
    if (!config.p.has_value() || !(*config.p < 0.0)) {
      throw Error(Errc::kPenaltyParamNonNegative,
                  "penalty game requires parameter p < 0");
    }
    const double p = *config.p;
    return matrix_game("penalty", {{{p, 0, 10}, {0, 2, 0}, {10, 0, p}}}, config);
  }
  if (config.name == "foraging") return foraging_game(config);
  throw Error(Errc::kUnknownGame, "unknown game '" + config.name +
                                      "' (expected vanilla, climbing, penalty, foraging)");
}

WorldState reset(const GameSpec& game, std::uint64_t seed) {
  WorldState state;
  if (game.kind == GameKind::kMatrix) return state;

  const int food_level = game.agent_levels[0] + game.agent_levels[1];
  const int cells = game.grid_rows * game.grid_cols;
  const int entities = game.n_foods + kNumAgents;
  RandomStream stream(derive_seed(seed, {0x5eedULL}));
  std::vector<int> picks(entities);
  for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
    for (int& cell : picks) cell = static_cast<int>(stream.below(cells));
    bool ok = true;
    for (int a = 0; a < entities && ok; ++a) {
      for (int b = a + 1; b < entities && ok; ++b) {
        if (picks[a] == picks[b]) ok = false;
        if (a < game.n_foods && b < game.n_foods &&
            adjacent(picks[a] / game.grid_cols, picks[a] % game.grid_cols,
                     picks[b] / game.grid_cols, picks[b] % game.grid_cols)) {
          ok = false;
        }
      }
    }
    if (!ok) continue;
    state.foods.clear();
    for (int f = 0; f < game.n_foods; ++f) {
      state.foods.push_back({picks[f] / game.grid_cols, picks[f] % game.grid_cols,
                             food_level, true});
    }
    for (int i = 0; i < kNumAgents; ++i) {
      const int cell = picks[game.n_foods + i];
      state.agents[i] = {cell / game.grid_cols, cell % game.grid_cols,
                         game.agent_levels[i]};
    }
    return state;
  }
  throw Error(Errc::kSpawnInfeasible,
              "no valid spawn after " + std::to_string(kMaxSpawnAttempts) + " attempts");
}

StepResult step(const GameSpec& game, const WorldState& state,
                const JointAction& joint_action) {
  if (state.done) throw Error(Errc::kStepAfterDone, "step called on a finished episode");
  check_actions(game, joint_action);
  return game.kind == GameKind::kMatrix ? step_matrix(game, state, joint_action)
                                        : step_foraging(game, state, joint_action);
}

std::vector<double> encode_state(const GameSpec& game, const WorldState& state) {
  if (game.kind == GameKind::kMatrix) return {static_cast<double>(state.round_index)};
  std::vector<double> out;
  out.reserve(3 * (state.foods.size() + kNumAgents));
  for (const auto& f : state.foods) {
    if (f.alive) {
      out.insert(out.end(), {double(f.row), double(f.col), double(f.level)});
    } else {
      out.insert(out.end(), {-1.0, -1.0, 0.0});
    }
  }
  for (const auto& a : state.agents) {
    out.insert(out.end(), {double(a.row), double(a.col), double(a.level)});
  }
  return out;
}

void check_world_invariants(const GameSpec& game, const WorldState& state) {
  if (game.kind == GameKind::kMatrix) return;
  std::vector<std::pair<int, int>> cells;
  for (const auto& f : state.foods) {
    if (f.alive) cells.emplace_back(f.row, f.col);
  }
  const std::size_t n_alive = cells.size();
  for (const auto& a : state.agents) cells.emplace_back(a.row, a.col);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!in_grid(game, cells[i].first, cells[i].second)) {
      throw Error(Errc::kInvalidGame, "entity outside the grid");
    }
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      if (cells[i] == cells[j]) throw Error(Errc::kInvalidGame, "entities overlap");
      if (i < n_alive && j < n_alive &&
          adjacent(cells[i].first, cells[i].second, cells[j].first, cells[j].second)) {
        throw Error(Errc::kInvalidGame, "alive foods are adjacent");
      }
    }
  }
}

std::string describe(const GameSpec& game) {
  std::ostringstream out;
  if (game.kind == GameKind::kMatrix) {
    out << "Two-player common-payoff 3x3 matrix game '" << game.name
        << "'. Both agents receive matrix[a0][a1], where a0 is agent 0's (row) action and "
           "a1 is agent 1's (column) action. Episodes last "
        << game.rounds_per_episode << " round(s). Payoff matrix:\n";
    for (const auto& row : game.matrix) {
      out << "  [" << row[0] << ", " << row[1] << ", " << row[2] << "]\n";
    }
    out << "A state is [round_index].";
    return out.str();
  }
  out << "Cooperative level-based foraging on a " << game.grid_rows << "x" << game.grid_cols
      << " grid with " << game.n_foods << " foods and agent levels ("
      << game.agent_levels[0] << ", " << game.agent_levels[1]
      << "). Actions: 0 stay_idle, 1 move_up (row-1), 2 move_down (row+1), 3 move_left "
         "(col-1), 4 move_right (col+1), 5 load_food. A food is collected only when both "
         "agents stand 4-adjacent to it and choose load_food in the same step. Collected "
         "food reward is shared in proportion to agent level and normalized so that "
         "collecting every food yields 1.0 in total. The episode ends when all foods are "
         "collected or after "
      << game.t_max << " steps; each agent then receives -" << game.penalty_lambda
      << " * steps_taken / " << game.t_max
      << ". A state is a flat list: for each food (row, col, level) with collected foods "
         "as (-1, -1, 0), then for each agent (row, col, level), agent 0 first.";
  return out.str();
}

}  // namespace pibr::game
