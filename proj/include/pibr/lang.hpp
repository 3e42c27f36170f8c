#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pibr/error.hpp"
#include "pibr/game.hpp"
#include "pibr/random.hpp"

// The policy language: a closed, pure, parenthesized prefix language whose
// programs map an interaction history to an action distribution.
//
//   program := (def name (param ...) body)* (policy (h) body)
//   expr    := number | symbol | (if c a b) | (let ((name expr) ...) body)
//            | (lambda (param ...) body) | (and expr ...) | (or expr ...)
//            | (f expr ...)
namespace pibr::lang {

struct SourceText {
  std::string text;
  std::string sha;  // hex SHA-256 of text
};

SourceText make_source(std::string text);

enum class FailureKind {
  kParseError,
  kArityError,
  kRuntimeError,
  kInvalidDistribution,
  kFuelExhausted,
  kDepthExceeded,
};

std::string_view failure_kind_name(FailureKind kind);

struct SourceLocation {
  int line = 0;
  int col = 0;
};

// Raised by parse and evaluation. what() gives the kind, line:col and the
// message, as used in diagnostics and feedback.
class LangError : public Error {
 public:
  LangError(FailureKind kind, SourceLocation loc, std::string detail);

  FailureKind kind() const noexcept { return kind_; }
  SourceLocation location() const noexcept { return loc_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  FailureKind kind_;
  SourceLocation loc_;
  std::string detail_;
};

struct Env;
struct Value;
using List = std::vector<Value>;
using ListPtr = std::shared_ptr<const List>;

// First-class function: a builtin, a top-level def, or a lambda closure.
struct Function {
  int builtin = -1;
  int def = -1;
  int lambda_node = -1;
  std::shared_ptr<const Env> env;
};

struct Value {
  std::variant<double, bool, ListPtr, Function> data;

  Value() : data(0.0) {}
  Value(double v) : data(v) {}
  Value(bool v) : data(v) {}
  Value(ListPtr v) : data(std::move(v)) {}
  Value(Function v) : data(std::move(v)) {}

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_list() const { return std::holds_alternative<ListPtr>(data); }
  bool is_function() const { return std::holds_alternative<Function>(data); }
  double number() const { return std::get<double>(data); }
  bool boolean() const { return std::get<bool>(data); }
  const List& list() const { return *std::get<ListPtr>(data); }
};

Value make_list(List items);
std::string to_string(const Value& value);
// Structural equality; functions compare by identity of their code.
bool same_value(const Value& a, const Value& b);

enum class NodeKind { kNumber, kSymbol, kIf, kLet, kLambda, kAnd, kOr, kCall };

struct Node {
  NodeKind kind = NodeKind::kNumber;
  SourceLocation loc;
  double number = 0.0;
  int symbol = -1;
  // kLet: names bound in order. kLambda: parameters.
  std::vector<int> names;
  // kIf: cond, then, else. kLet: one per binding, then body. kLambda: body.
  // kAnd/kOr: operands. kCall: callee, then arguments.
  std::vector<int> children;
};

struct Definition {
  int name = -1;
  std::vector<int> params;
  int body = -1;
  SourceLocation loc;
};

struct Ast {
  std::vector<Node> nodes;
  std::vector<std::string> symbols;
  std::vector<Definition> defs;
  Definition entry;
  // Indexed by symbol id: top-level def index or -1, builtin id or -1.
  std::vector<int> symbol_def;
  std::vector<int> symbol_builtin;
};

class PolicyProgram {
 public:
  PolicyProgram(std::shared_ptr<const Ast> ast, SourceText source)
      : ast_(std::move(ast)), source_(std::move(source)) {}

  const Ast& ast() const { return *ast_; }
  const Definition& entry() const { return ast_->entry; }
  const SourceText& source() const { return source_; }
  // 0 until the probe suite has passed for some game.
  int n_actions() const { return n_actions_; }
  bool validated() const { return n_actions_ > 0; }
  void mark_validated(int n_actions) { n_actions_ = n_actions; }

 private:
  std::shared_ptr<const Ast> ast_;
  SourceText source_;
  int n_actions_ = 0;
};

PolicyProgram parse(const SourceText& source);
PolicyProgram parse(std::string_view text);

inline constexpr std::int64_t kDefaultFuel = 100000;
inline constexpr int kMaxCallDepth = 256;

struct EvalLimits {
  std::int64_t fuel = kDefaultFuel;
  int max_call_depth = kMaxCallDepth;
};

// Evaluates the policy entry on `argument`. Every evaluation step consumes
// one unit of fuel; list construction consumes one unit per element.
Value evaluate_entry(const PolicyProgram& program, const Value& argument,
                     EvalLimits limits = {});

// History as the two-element list [states, actions].
Value history_value(const game::History& history);

// Raw numeric output of the policy on `history`. Throws LangError.
std::vector<double> evaluate_policy(const PolicyProgram& program,
                                    const game::History& history,
                                    std::int64_t fuel = kDefaultFuel);

// Checks length, finiteness and normalization; clamps tiny negatives and
// renormalizes. Throws LangError(kInvalidDistribution).
std::vector<double> check_distribution(std::vector<double> dist, int n_actions);

struct ValidationFailure {
  FailureKind kind = FailureKind::kRuntimeError;
  std::string message;
  // 0 and 1 are the probe histories; -1 marks a failure surfaced later, while
  // rolling the policy out.
  int probe_index = 0;
};

struct ValidationReport {
  bool ok = true;
  std::optional<ValidationFailure> failure;
};

// The two probe histories run by validate().
std::vector<game::History> probe_histories(const game::GameSpec& game);

ValidationReport validate(const game::GameSpec& game, const PolicyProgram& program);
// Parse + validate; parse failures become a kParseError report.
ValidationReport validate_source(const game::GameSpec& game, const SourceText& source);

int sample(const std::vector<double>& dist, RandomStream& stream);

// Language reference embedded in operator prompts.
const std::string& grammar_doc();

}  // namespace pibr::lang
