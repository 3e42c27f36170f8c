#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pibr::game {

enum class GameKind { kMatrix, kForaging };

// Foraging action order is part of the policy calling convention.
enum ForageAction : int {
  kStayIdle = 0,
  kMoveUp = 1,
  kMoveDown = 2,
  kMoveLeft = 3,
  kMoveRight = 4,
  kLoadFood = 5,
};

inline constexpr int kMatrixActions = 3;
inline constexpr int kForageActions = 6;
inline constexpr int kNumAgents = 2;

using Payoffs = std::array<std::array<double, 3>, 3>;
using JointAction = std::array<int, kNumAgents>;
using RewardPair = std::array<double, kNumAgents>;

// Immutable game definition. Only the fields relevant to `kind` are meaningful.
struct GameSpec {
  GameKind kind = GameKind::kMatrix;
  std::string name;
  // Common-payoff matrix: row = agent 0's action, column = agent 1's.
  Payoffs matrix{};
  int rounds_per_episode = 1;
  int grid_rows = 5;
  int grid_cols = 5;
  int n_foods = 2;
  std::array<int, kNumAgents> agent_levels{1, 1};
  int t_max = 50;
  double penalty_lambda = 0.2;
  int n_actions = kMatrixActions;
};

// Parameters accepted by make_game. Unset optionals take the game defaults.
struct GameConfig {
  std::string name;
  std::optional<double> p;
  std::optional<int> rounds;
  std::optional<int> grid_rows;
  std::optional<int> grid_cols;
  std::optional<int> n_foods;
  std::optional<std::array<int, kNumAgents>> agent_levels;
  std::optional<int> t_max;
  std::optional<double> penalty_lambda;
};

GameSpec make_game(const GameConfig& config);

struct FoodSlot {
  int row = 0;
  int col = 0;
  int level = 0;
  bool alive = true;
};

struct AgentSlot {
  int row = 0;
  int col = 0;
  int level = 0;
};

struct WorldState {
  int round_index = 0;
  std::vector<FoodSlot> foods;
  std::array<AgentSlot, kNumAgents> agents{};
  int step_index = 0;
  bool done = false;
};

struct StepResult {
  WorldState state;
  RewardPair rewards{};
  bool done = false;
};

// Interaction history: states.size() == actions.size() + 1.
struct History {
  std::vector<std::vector<double>> states;
  std::vector<JointAction> actions;
};

struct Trajectory {
  History history;
  std::vector<RewardPair> rewards;
  RewardPair returns{};
  int terminal_step = 0;
  bool all_collected = false;
};

WorldState reset(const GameSpec& game, std::uint64_t seed);
StepResult step(const GameSpec& game, const WorldState& state,
                const JointAction& joint_action);

// Flat numeric encoding seen by policies. Matrix: [round_index]. Foraging:
// foods as (row, col, level) in spawn order, collected foods as (-1, -1, 0),
// then agents as (row, col, level).
std::vector<double> encode_state(const GameSpec& game, const WorldState& state);

// Throws if positions are out of bounds, overlap, or foods are adjacent.
void check_world_invariants(const GameSpec& game, const WorldState& state);

std::string describe(const GameSpec& game);

}  // namespace pibr::game
