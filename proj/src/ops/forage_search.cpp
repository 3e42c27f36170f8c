#include <spdlog/spdlog.h>

#include <limits>
#include <sstream>

#include "pibr/operators.hpp"
#include "pibr/rollout.hpp"

namespace pibr::ops {
namespace {

// Shared helpers. State layout: foods (row, col, level) first, then agents.
constexpr std::string_view kHelpers = R"((def nf (s) (- (/ (len s) 3) 2))
(def fr (s i) (get s (* 3 i)))
(def fc (s i) (get s (+ (* 3 i) 1)))
(def alive (s i) (> (get s (+ (* 3 i) 2)) 0))
(def ar (s k) (get s (+ (* 3 (nf s)) (* 3 k))))
(def ac (s k) (get s (+ (* 3 (nf s)) (* 3 k) 1)))
(def manhattan (r1 c1 r2 c2) (+ (abs (- r1 r2)) (abs (- c1 c2))))
(def food-dist (s k i) (manhattan (ar s k) (ac s k) (fr s i) (fc s i)))
(def adjacent (s k i) (= (food-dist s k i) 1))
(def food-at (s r c)
  (fold (lambda (acc i) (or acc (and (alive s i) (= (fr s i) r) (= (fc s i) c))))
        false (range (nf s))))
(def agent-at (s k r c) (and (= (ar s k) r) (= (ac s k) c)))
(def free (s r c)
  (and (>= r 0) (< r ROWS) (>= c 0) (< c COLS)
       (not (food-at s r c)) (not (agent-at s 0 r c)) (not (agent-at s 1 r c))))
(def drow (a) (get (list 0 -1 1 0 0 0) a))
(def dcol (a) (get (list 0 0 0 -1 1 0) a))
(def onehot (a) (fold (lambda (acc j) (append acc (if (= j a) 1 0))) (list) (range 6)))
; nearest free cell next to food i as seen from agent k, skipping `skip`
(def approach-cell (s k i skip)
  (fold (lambda (best a)
          (let ((r (+ (fr s i) (drow a)))
                (c (+ (fc s i) (dcol a))))
            (if (and (free s r c)
                     (not (and (= (len skip) 2) (= r (get skip 0)) (= c (get skip 1))))
                     (or (= (len best) 0)
                         (< (manhattan (ar s k) (ac s k) r c)
                            (manhattan (ar s k) (ac s k) (get best 0) (get best 1)))))
                (list r c)
                best)))
        (list) ORDER))
(def cell-is (cell r c) (and (= (len cell) 2) (= (get cell 0) r) (= (get cell 1) c)))
(def first-move (s r c gr gc closer avoid)
  (fold (lambda (acc a)
          (let ((nr (+ r (drow a)))
                (nc (+ c (dcol a))))
            (if (and (= acc 0)
                     (free s nr nc)
                     (not (cell-is avoid nr nc))
                     (or (not closer) (< (manhattan nr nc gr gc) (manhattan r c gr gc))))
                a acc)))
        0 ORDER))
; action for agent k heading to (gr, gc) without entering `avoid`
(def move-toward (s k gr gc avoid)
  (let ((r (ar s k))
        (c (ac s k))
        (closer (first-move s r c gr gc true avoid)))
    (if (> closer 0) closer (first-move s r c gr gc false avoid))))
)";

constexpr std::string_view kTargetLowest = R"((def target (s k)
  (fold (lambda (acc i) (if (and (< acc 0) (alive s i)) i acc)) -1 (range (nf s))))
)";

// Nearest to the pair, so both agents agree on the target.
constexpr std::string_view kTargetNearest = R"((def pair-dist (s i) (+ (food-dist s 0 i) (food-dist s 1 i)))
(def target (s k)
  (fold (lambda (acc i)
          (if (and (alive s i) (or (< acc 0) (< (pair-dist s i) (pair-dist s acc))))
              i acc))
        -1 (range (nf s))))
)";

// Agent 0 plans first. Agent 1 leaves agent 0's approach cell free and
// never steps into the cell agent 0 is about to enter.
constexpr std::string_view kGoalRole0 = R"((def my-goal (s i) (approach-cell s 0 i (list)))
(def my-avoid (s) (list))
)";

constexpr std::string_view kGoalRole1 = R"((def my-goal (s i)
  (approach-cell s 1 i (if (adjacent s 0 i) (list) (approach-cell s 0 i (list)))))
(def lead-action (s)
  (let ((i (target s 0)))
    (if (or (< i 0) (adjacent s 0 i))
        0
        (let ((goal (approach-cell s 0 i (list))))
          (if (= (len goal) 0) 0 (move-toward s 0 (get goal 0) (get goal 1) (list)))))))
(def my-avoid (s)
  (let ((a (lead-action s)))
    (list (+ (ar s 0) (drow a)) (+ (ac s 0) (dcol a)))))
)";

constexpr std::string_view kPolicy = R"((policy (h)
  (let ((states (get h 0))
        (s (get states (- (len states) 1)))
        (i (target s ME)))
    (if (< i 0)
        (onehot 0)
        (if (adjacent s ME i)
            (if LOAD (onehot 5) (onehot 0))
            (let ((goal (my-goal s i)))
              (if (= (len goal) 0)
                  (onehot 0)
                  (onehot (move-toward s ME (get goal 0) (get goal 1) (my-avoid s)))))))))
)";

void replace_all(std::string& text, std::string_view from, const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

std::string template_label(const ForageTemplate& t) {
  std::string label = t.target == TargetRule::kLowestIndex ? "target=lowest" : "target=nearest";
  label += t.load == LoadRule::kWhenPartnerAdjacent ? " load=with-partner" : " load=whenever";
  label += t.order == MoveOrder::kUpDownLeftRight ? " order=udlr" : " order=lrud";
  return label;
}

}  // namespace

std::vector<ForageTemplate> forage_template_grid() {
  std::vector<ForageTemplate> grid;
  for (TargetRule target : {TargetRule::kLowestIndex, TargetRule::kNearest}) {
    for (LoadRule load : {LoadRule::kWhenPartnerAdjacent, LoadRule::kWheneverAdjacent}) {
      for (MoveOrder order : {MoveOrder::kUpDownLeftRight, MoveOrder::kLeftRightUpDown}) {
        grid.push_back({target, load, order});
      }
    }
  }
  return grid;
}

std::string render_forage_template(const game::GameSpec& game, int role,
                                   const ForageTemplate& tmpl) {
  std::string source = "; forage template for agent " + std::to_string(role) + ": " +
                       template_label(tmpl) + "\n";
  source += kHelpers;
  source += tmpl.target == TargetRule::kLowestIndex ? kTargetLowest : kTargetNearest;
  source += role == 0 ? kGoalRole0 : kGoalRole1;
  source += kPolicy;
  replace_all(source, "ROWS", std::to_string(game.grid_rows));
  replace_all(source, "COLS", std::to_string(game.grid_cols));
  replace_all(source, "ORDER",
              tmpl.order == MoveOrder::kUpDownLeftRight ? "(list 1 2 3 4)" : "(list 3 4 1 2)");
  replace_all(source, "ME", std::to_string(role));
  replace_all(source, "LOAD",
              tmpl.load == LoadRule::kWhenPartnerAdjacent
                  ? "(adjacent s " + std::to_string(1 - role) + " i)"
                  : std::string("true"));
  return source;
}

ForageSearchResult forage_search(const game::GameSpec& game, int role,
                                 const lang::SourceText& opponent_source, int budget,
                                 int eval_episodes, std::uint64_t seed) {
  ForageSearchResult result;
  const std::vector<ForageTemplate> grid = forage_template_grid();
  const int count = std::min<int>(budget, static_cast<int>(grid.size()));

  std::optional<lang::PolicyProgram> opponent;
  if (lang::validate_source(game, opponent_source).ok) {
    opponent = lang::parse(opponent_source);
  } else {
    spdlog::warn("forage search: opponent policy invalid; assuming a uniform opponent");
    std::string uniform = "(policy (h) (list";
    for (int a = 0; a < game.n_actions; ++a) uniform += " (/ 1 " + std::to_string(game.n_actions) + ")";
    opponent = lang::parse(uniform + "))");
  }

  std::vector<std::string> sources;
  for (int k = 0; k < count; ++k) {
    result.templates.push_back(grid[k]);
    sources.push_back(render_forage_template(game, role, grid[k]));
    double score = -std::numeric_limits<double>::infinity();
    try {
      const lang::PolicyProgram mine = lang::parse(sources.back());
      if (lang::validate(game, mine).ok) {
        game::PolicyPair pair{};
        pair[role] = &mine;
        pair[1 - role] = &*opponent;
        double total = 0.0;
        for (int e = 0; e < eval_episodes; ++e) {
          total += game::rollout(game, pair, derive_seed(seed, {static_cast<std::uint64_t>(e)}))
                       .returns[role];
        }
        score = total / eval_episodes;
      }
    } catch (const Error& e) {
      spdlog::warn("forage search: template {} failed: {}", k, e.what());
    }
    result.scores.push_back(score);
    if (score > result.scores[result.best]) result.best = k;
  }
  result.candidate = {lang::make_source(sources[result.best]), CandidateOrigin::kOracle};
  return result;
}

Candidate oracle_forage_search(const game::GameSpec& game, int role,
                               const lang::SourceText& opponent_source, int budget,
                               int eval_episodes, std::uint64_t seed) {
  return forage_search(game, role, opponent_source, budget, eval_episodes, seed).candidate;
}

}  // namespace pibr::ops
