#include <algorithm>
#include <unordered_set>

#include "builtins.hpp"
#include "pibr/lang.hpp"

namespace pibr::lang {
namespace {

// Scope check plus arity check of direct calls to defs and builtins. Runs
// before the probes so that unreachable branches are covered too.
class StaticChecker {
 public:
  explicit StaticChecker(const Ast& ast) : ast_(ast) {}

  void check() {
    if (ast_.entry.params.size() != 1) {
      throw LangError(FailureKind::kArityError, ast_.entry.loc,
                      "policy must take exactly one parameter (the history), found " +
                          std::to_string(ast_.entry.params.size()));
    }
    for (const Definition& def : ast_.defs) visit_definition(def);
    visit_definition(ast_.entry);
  }

 private:
  void visit_definition(const Definition& def) {
    scope_.assign(def.params.begin(), def.params.end());
    visit(def.body);
  }

  bool bound_locally(int symbol) const {
    return std::find(scope_.begin(), scope_.end(), symbol) != scope_.end();
  }

  void visit(int index) {
    const Node& node = ast_.nodes[index];
    switch (node.kind) {
      case NodeKind::kNumber:
        return;
      case NodeKind::kSymbol:
        if (!bound_locally(node.symbol) && ast_.symbol_def[node.symbol] < 0 &&
            ast_.symbol_builtin[node.symbol] < 0) {
          throw LangError(FailureKind::kRuntimeError, node.loc,
                          "unbound symbol `" + ast_.symbols[node.symbol] + "`");
        }
        return;
      case NodeKind::kLet: {
        const std::size_t mark = scope_.size();
        for (std::size_t i = 0; i < node.names.size(); ++i) {
          visit(node.children[i]);
          scope_.push_back(node.names[i]);
        }
        visit(node.children.back());
        scope_.resize(mark);
        return;
      }
      case NodeKind::kLambda: {
        const std::size_t mark = scope_.size();
        scope_.insert(scope_.end(), node.names.begin(), node.names.end());
        visit(node.children[0]);
        scope_.resize(mark);
        return;
      }
      case NodeKind::kCall:
        check_call_arity(node);
        [[fallthrough]];
      case NodeKind::kIf:
      case NodeKind::kAnd:
      case NodeKind::kOr:
        for (int child : node.children) visit(child);
        return;
    }
  }

  void check_call_arity(const Node& node) {
    const Node& callee = ast_.nodes[node.children[0]];
    if (callee.kind != NodeKind::kSymbol || bound_locally(callee.symbol)) return;
    const int n = static_cast<int>(node.children.size()) - 1;
    const std::string& name = ast_.symbols[callee.symbol];
    if (const int def = ast_.symbol_def[callee.symbol]; def >= 0) {
      const int expected = static_cast<int>(ast_.defs[def].params.size());
      if (n != expected) {
        throw LangError(FailureKind::kArityError, node.loc,
                        "`" + name + "` expects " + std::to_string(expected) +
                            " argument(s), got " + std::to_string(n));
      }
      return;
    }
    if (const int b = ast_.symbol_builtin[callee.symbol]; b >= 0) {
      const BuiltinInfo& info = kBuiltins[b];
      if (info.constant) {
        throw LangError(FailureKind::kRuntimeError, node.loc,
                        "type mismatch: cannot call constant `" + name + "`");
      }
      if (n < info.min_args || (info.max_args >= 0 && n > info.max_args)) {
        throw LangError(FailureKind::kArityError, node.loc,
                        "`" + name + "` does not accept " + std::to_string(n) +
                            " argument(s)");
      }
    }
  }

  const Ast& ast_;
  std::vector<int> scope_;
};

ValidationReport failure(FailureKind kind, std::string message, int probe) {
  ValidationReport report;
  report.ok = false;
  report.failure = ValidationFailure{kind, std::move(message), probe};
  return report;
}

}  // namespace

std::vector<game::History> probe_histories(const game::GameSpec& spec) {
  std::vector<game::History> probes;

  game::History empty;
  empty.states.push_back(game::encode_state(spec, game::reset(spec, 0)));
  probes.push_back(empty);

  // Length-3 synthetic history: uniform random joint actions from seed 0,
  // starting a fresh episode whenever one ends.
  game::History synthetic;
  RandomStream stream(derive_seed(0, {0x9e0beULL}));
  std::uint64_t episode = 0;
  game::WorldState state = game::reset(spec, episode);
  synthetic.states.push_back(game::encode_state(spec, state));
  for (int t = 0; t < 3; ++t) {
    game::JointAction joint{static_cast<int>(stream.below(spec.n_actions)),
                            static_cast<int>(stream.below(spec.n_actions))};
    game::StepResult next = game::step(spec, state, joint);
    state = next.done ? game::reset(spec, ++episode) : next.state;
    synthetic.actions.push_back(joint);
    synthetic.states.push_back(game::encode_state(spec, state));
  }
  probes.push_back(synthetic);
  return probes;
}

ValidationReport validate(const game::GameSpec& spec, const PolicyProgram& program) {
  try {
    StaticChecker(program.ast()).check();
  } catch (const LangError& e) {
    return failure(e.kind(), e.what(), 0);
  }
  const std::vector<game::History> probes = probe_histories(spec);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const int probe = static_cast<int>(i);
    try {
      check_distribution(evaluate_policy(program, probes[i]), spec.n_actions);
    } catch (const LangError& e) {
      if (e.kind() == FailureKind::kInvalidDistribution) {
        return failure(e.kind(), "InvalidDistribution — " + e.detail(), probe);
      }
      return failure(e.kind(), e.what(), probe);
    }
  }
  return ValidationReport{};
}

ValidationReport validate_source(const game::GameSpec& spec, const SourceText& source) {
  try {
    return validate(spec, parse(source));
  } catch (const LangError& e) {
    return failure(e.kind(), e.what(), 0);
  }
}

}  // namespace pibr::lang
