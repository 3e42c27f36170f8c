#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pibr/error.hpp"

// Modal agents for the one-shot prisoner's dilemma. A formula over `opp`
// ("the opponent cooperates against me") is read on a finite linear frame
// where (box f) holds at world w iff f holds at every earlier world.
namespace pibr::modal {

enum class Op { kTop, kBot, kOpp, kNot, kAnd, kOr, kImplies, kBox };

struct Formula {
  Op op = Op::kTop;
  std::vector<std::shared_ptr<const Formula>> args;
};
using FormulaPtr = std::shared_ptr<const Formula>;

struct ModalAgent {
  std::string name;
  FormulaPtr formula;
  std::string source;
};

enum class Move { kC, kD };
char move_char(Move m);

struct Payoffs {
  double temptation = 5.0;  // r_T
  double reward = 3.0;      // r_R
  double punishment = 1.0;  // r_P
  double sucker = 0.0;      // r_S
};

// Throws InvalidPayoffs unless r_T > r_R > r_P > r_S.
void validate_payoffs(const Payoffs& p);

struct OutcomeReport {
  std::array<Move, 2> actions{Move::kD, Move::kD};
  int stabilized_at_world = 0;
  std::array<double, 2> payoffs{0.0, 0.0};
  int horizon = 0;
  // truth[w] = {a_w, b_w}
  std::vector<std::array<bool, 2>> truth;
};

// Throws ParseError or GuardednessError.
ModalAgent parse_modal(std::string_view source, std::string name = "");

int modal_depth(const Formula& f);
bool is_guarded(const Formula& f);
std::string to_string(const Formula& f);

// horizon < 0 selects N = 3 * (1 + max depth). Throws NonStabilized.
OutcomeReport evaluate_pair(const ModalAgent& a, const ModalAgent& b,
                            const Payoffs& payoffs = {}, int horizon = -1);

// Truth of a single self-referential agent p <-> phi[opp := p] at worlds 0..horizon.
std::vector<bool> evaluate_self(const ModalAgent& a, int horizon);

struct Deviation {
  std::string deviator;
  int seat = 0;
  double deviation_payoff = 0.0;
  double profile_payoff = 0.0;
  bool profitable = false;
};

struct NashReport {
  bool is_nash = true;
  std::array<double, 2> profile_payoffs{0.0, 0.0};
  std::vector<Deviation> deviations;
};

NashReport nash_check(const std::vector<ModalAgent>& family,
                      const std::array<ModalAgent, 2>& profile, const Payoffs& payoffs = {});

// `name = formula` per line, `#` starts a comment.
std::vector<ModalAgent> parse_agent_file(std::string_view text);
std::vector<ModalAgent> load_agent_file(const std::string& path);

// CB = top, DB = bot, FB = (box opp).
std::string_view bundled_family_text();
std::vector<ModalAgent> bundled_family();
const ModalAgent& find_agent(const std::vector<ModalAgent>& family, std::string_view name);

}  // namespace pibr::modal
