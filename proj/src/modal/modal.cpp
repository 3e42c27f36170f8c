#include "pibr/modal.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace pibr::modal {
namespace {

constexpr std::string_view kFamily = R"(# Bundled modal agents.
CB = top
DB = bot
FB = (box opp)
)";

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  FormulaPtr read_all() {
    FormulaPtr f = read();
    skip_space();
    if (pos_ < text_.size()) fail("trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::kParseError,
                "modal formula: " + what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string atom() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("expected a symbol");
    return std::string(text_.substr(start, pos_ - start));
  }

  FormulaPtr read() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] != '(') {
      const std::string name = atom();
      auto f = std::make_shared<Formula>();
      if (name == "top") f->op = Op::kTop;
      else if (name == "bot") f->op = Op::kBot;
      else if (name == "opp") f->op = Op::kOpp;
      else fail("unknown atom '" + name + "'");
      return f;
    }
    ++pos_;
    const std::string head = atom();
    auto f = std::make_shared<Formula>();
    std::size_t arity = 2;
    if (head == "not") { f->op = Op::kNot; arity = 1; }
    else if (head == "box") { f->op = Op::kBox; arity = 1; }
    else if (head == "and") f->op = Op::kAnd;
    else if (head == "or") f->op = Op::kOr;
    else if (head == "implies") f->op = Op::kImplies;
    else fail("unknown connective '" + head + "'");
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) fail("missing ')'");
      if (text_[pos_] == ')') break;
      f->args.push_back(read());
    }
    ++pos_;
    if (f->args.size() != arity) {
      fail("'" + head + "' takes " + std::to_string(arity) + " argument(s), got " +
           std::to_string(f->args.size()));
    }
    return f;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool guarded_under(const Formula& f, bool boxed) {
  if (f.op == Op::kOpp) return boxed;
  const bool inner = boxed || f.op == Op::kBox;
  return std::all_of(f.args.begin(), f.args.end(),
                     [&](const FormulaPtr& g) { return guarded_under(*g, inner); });
}

// Evaluates one side of the mutual system. `opp` reads the other side's
// already computed truth values, which guardedness keeps strictly in the past.
class Side {
 public:
  Side(const Formula& root, const std::vector<bool>& other) : root_(root), other_(other) {}

  bool at(int w) { return eval(root_, w); }

 private:
  bool eval(const Formula& f, int w) {
    switch (f.op) {
      case Op::kTop: return true;
      case Op::kBot: return false;
      case Op::kOpp: return other_.at(w);
      case Op::kNot: return !eval(*f.args[0], w);
      case Op::kAnd: return eval(*f.args[0], w) && eval(*f.args[1], w);
      case Op::kOr: return eval(*f.args[0], w) || eval(*f.args[1], w);
      case Op::kImplies: return !eval(*f.args[0], w) || eval(*f.args[1], w);
      case Op::kBox: {
        const auto key = std::make_pair(&f, w);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        bool all = true;
        for (int v = 0; v < w && all; ++v) all = eval(*f.args[0], v);
        memo_.emplace(key, all);
        return all;
      }
    }
    return false;
  }

  const Formula& root_;
  const std::vector<bool>& other_;
  std::map<std::pair<const Formula*, int>, bool> memo_;
};

std::array<double, 2> assign_payoffs(Move a, Move b, const Payoffs& p) {
  if (a == Move::kC && b == Move::kC) return {p.reward, p.reward};
  if (a == Move::kD && b == Move::kD) return {p.punishment, p.punishment};
  if (a == Move::kD) return {p.temptation, p.sucker};
  return {p.sucker, p.temptation};
}

}  // namespace

char move_char(Move m) { return m == Move::kC ? 'C' : 'D'; }

void validate_payoffs(const Payoffs& p) {
  if (!(p.temptation > p.reward && p.reward > p.punishment && p.punishment > p.sucker)) {
    throw Error(Errc::kInvalidPayoffs, "payoffs must satisfy r_T > r_R > r_P > r_S");
  }
}

ModalAgent parse_modal(std::string_view source, std::string name) {
  FormulaPtr f = Reader(source).read_all();
  if (!is_guarded(*f)) {
    throw Error(Errc::kGuardednessError,
                "modal agent" + (name.empty() ? std::string() : " '" + name + "'") +
                    ": every occurrence of opp must lie under a box");
  }
  return {std::move(name), std::move(f), std::string(source)};
}

int modal_depth(const Formula& f) {
  int inner = 0;
  for (const FormulaPtr& g : f.args) inner = std::max(inner, modal_depth(*g));
  return inner + (f.op == Op::kBox ? 1 : 0);
}

bool is_guarded(const Formula& f) { return guarded_under(f, false); }

std::string to_string(const Formula& f) {
  switch (f.op) {
    case Op::kTop: return "top";
    case Op::kBot: return "bot";
    case Op::kOpp: return "opp";
    default: break;
  }
  static const std::map<Op, std::string> names{{Op::kNot, "not"}, {Op::kAnd, "and"},
                                               {Op::kOr, "or"},   {Op::kImplies, "implies"},
                                               {Op::kBox, "box"}};
  std::string out = "(" + names.at(f.op);
  for (const FormulaPtr& g : f.args) out += " " + to_string(*g);
  return out + ")";
}

OutcomeReport evaluate_pair(const ModalAgent& a, const ModalAgent& b, const Payoffs& payoffs,
                            int horizon) {
  validate_payoffs(payoffs);
  if (!is_guarded(*a.formula) || !is_guarded(*b.formula)) {
    throw Error(Errc::kGuardednessError, "evaluate_pair requires box-guarded agents");
  }
  const int depth = std::max(modal_depth(*a.formula), modal_depth(*b.formula));
  const int n = horizon < 0 ? 3 * (1 + depth) : horizon;
  const int window = depth + 1;

  std::vector<bool> av;
  std::vector<bool> bv;
  Side side_a(*a.formula, bv);
  Side side_b(*b.formula, av);
  OutcomeReport report;
  report.horizon = n;
  for (int w = 0; w <= n; ++w) {
    const bool x = side_a.at(w);
    const bool y = side_b.at(w);
    av.push_back(x);
    bv.push_back(y);
    report.truth.push_back({x, y});
  }

  int start = n;
  while (start > 0 && report.truth[start - 1] == report.truth[n]) --start;
  if (n - start + 1 < window) {
    throw Error(Errc::kNonStabilized, "modal pair (" + a.name + ", " + b.name +
                                          ") still oscillating at world " + std::to_string(n));
  }
  report.stabilized_at_world = start;
  report.actions = {report.truth[n][0] ? Move::kC : Move::kD,
                    report.truth[n][1] ? Move::kC : Move::kD};
  report.payoffs = assign_payoffs(report.actions[0], report.actions[1], payoffs);
  return report;
}

std::vector<bool> evaluate_self(const ModalAgent& a, int horizon) {
  if (!is_guarded(*a.formula)) {
    throw Error(Errc::kGuardednessError, "evaluate_self requires a box-guarded agent");
  }
  std::vector<bool> values;
  Side side(*a.formula, values);
  for (int w = 0; w <= horizon; ++w) {
    const bool v = side.at(w);
    values.push_back(v);
  }
  return values;
}

NashReport nash_check(const std::vector<ModalAgent>& family,
                      const std::array<ModalAgent, 2>& profile, const Payoffs& payoffs) {
  auto tagged = [](const ModalAgent& x, const ModalAgent& y, const Payoffs& p) {
    try {
      return evaluate_pair(x, y, p);
    } catch (const Error& e) {
      if (e.code() != Errc::kNonStabilized) throw;
      throw Error(Errc::kNonStabilized,
                  std::string(e.what()) + " [pair " + x.name + "," + y.name + "]");
    }
  };
  NashReport report;
  report.profile_payoffs = tagged(profile[0], profile[1], payoffs).payoffs;
  for (const ModalAgent& x : family) {
    for (int seat = 0; seat < 2; ++seat) {
      const OutcomeReport out = seat == 0 ? tagged(x, profile[1], payoffs)
                                          : tagged(profile[0], x, payoffs);
      Deviation d;
      d.deviator = x.name;
      d.seat = seat;
      d.deviation_payoff = out.payoffs[seat];
      d.profile_payoff = report.profile_payoffs[seat];
      d.profitable = d.deviation_payoff > d.profile_payoff;
      if (d.profitable) report.is_nash = false;
      report.deviations.push_back(d);
    }
  }
  return report;
}

std::vector<ModalAgent> parse_agent_file(std::string_view text) {
  std::vector<ModalAgent> agents;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kParseError,
                  "agent file line " + std::to_string(line_no) + ": expected 'name = formula'");
    }
    auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t\r");
      const std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string name = trim(line.substr(0, eq));
    if (name.empty()) {
      throw Error(Errc::kParseError,
                  "agent file line " + std::to_string(line_no) + ": empty agent name");
    }
    agents.push_back(parse_modal(trim(line.substr(eq + 1)), name));
  }
  return agents;
}

std::vector<ModalAgent> load_agent_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot read agent file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_agent_file(buffer.str());
}

std::string_view bundled_family_text() { return kFamily; }

std::vector<ModalAgent> bundled_family() { return parse_agent_file(kFamily); }

const ModalAgent& find_agent(const std::vector<ModalAgent>& family, std::string_view name) {
  for (const ModalAgent& a : family) {
    if (a.name == name) return a;
  }
  throw Error(Errc::kUnknownAgent, "unknown modal agent '" + std::string(name) + "'");
}

}  // namespace pibr::modal
