#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "builtins.hpp"
#include "pibr/lang.hpp"

namespace pibr::lang {

// One binding per frame; frames are immutable once built and shared by
// closures.
struct Env {
  std::shared_ptr<const Env> parent;
  int symbol = -1;
  Value value;
};

namespace {

// Deep evaluation nesting is bounded separately from call depth so that
// pathological programs fail cleanly instead of exhausting the native stack.
constexpr int kMaxEvalNesting = 12000;
constexpr std::int64_t kMaxListLength = 1'000'000;

Errc errc_for(FailureKind kind) {
  switch (kind) {
    case FailureKind::kParseError: return Errc::kParseError;
    case FailureKind::kArityError: return Errc::kArityError;
    case FailureKind::kRuntimeError: return Errc::kRuntimeError;
    case FailureKind::kInvalidDistribution: return Errc::kInvalidDistribution;
    case FailureKind::kFuelExhausted: return Errc::kFuelExhausted;
    case FailureKind::kDepthExceeded: return Errc::kDepthExceeded;
  }
  return Errc::kRuntimeError;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string type_name(const Value& v) {
  if (v.is_number()) return "number";
  if (v.is_bool()) return "boolean";
  if (v.is_list()) return "list";
  return "function";
}

class Evaluator {
 public:
  Evaluator(const Ast& ast, EvalLimits limits) : ast_(ast), limits_(limits) {}

  Value call_entry(const Value& argument) {
    const Definition& entry = ast_.entry;
    if (entry.params.size() != 1) {
      throw LangError(FailureKind::kArityError, entry.loc,
                      "policy must take exactly one parameter (the history), found " +
                          std::to_string(entry.params.size()));
    }
    auto frame = std::make_shared<Env>();
    frame->symbol = entry.params[0];
    frame->value = argument;
    return eval(entry.body, frame);
  }

 private:
  using EnvPtr = std::shared_ptr<const Env>;

  struct NestingGuard {
    explicit NestingGuard(int& depth) : depth_(depth) { ++depth_; }
    ~NestingGuard() { --depth_; }
    int& depth_;
  };

  [[noreturn]] void runtime(SourceLocation loc, std::string message) const {
    throw LangError(FailureKind::kRuntimeError, loc, std::move(message));
  }

  void charge(std::int64_t amount, SourceLocation loc) {
    limits_.fuel -= amount;
    if (limits_.fuel < 0) {
      throw LangError(FailureKind::kFuelExhausted, loc, "evaluation ran out of fuel");
    }
  }

  double expect_number(const Value& v, SourceLocation loc, std::string_view what) const {
    if (!v.is_number()) {
      runtime(loc, "type mismatch: " + std::string(what) + " expects a number, got " +
                       type_name(v));
    }
    return v.number();
  }

  bool expect_bool(const Value& v, SourceLocation loc, std::string_view what) const {
    if (!v.is_bool()) {
      runtime(loc, "type mismatch: " + std::string(what) + " expects a boolean, got " +
                       type_name(v));
    }
    return v.boolean();
  }

  const List& expect_list(const Value& v, SourceLocation loc, std::string_view what) const {
    if (!v.is_list()) {
      runtime(loc, "type mismatch: " + std::string(what) + " expects a list, got " +
                       type_name(v));
    }
    return v.list();
  }

  std::int64_t expect_index(const Value& v, SourceLocation loc, std::string_view what) const {
    const double d = expect_number(v, loc, what);
    if (d != std::floor(d) || std::fabs(d) > 1e15) {
      runtime(loc, "type mismatch: " + std::string(what) + " expects an integer, got " +
                       format_number(d));
    }
    return static_cast<std::int64_t>(d);
  }

  Value finite(double v, SourceLocation loc) const {
    if (!std::isfinite(v)) runtime(loc, "arithmetic produced a non-finite number");
    return Value(v);
  }

  const Value* lookup(const EnvPtr& env, int symbol) const {
    for (const Env* e = env.get(); e != nullptr; e = e->parent.get()) {
      if (e->symbol == symbol) return &e->value;
    }
    return nullptr;
  }

  Value eval(int index, const EnvPtr& env) {
    const Node& node = ast_.nodes[index];
    charge(1, node.loc);
    NestingGuard guard(nesting_);
    if (nesting_ > kMaxEvalNesting) {
      throw LangError(FailureKind::kDepthExceeded, node.loc, "expression evaluation nested too deeply");
    }
    switch (node.kind) {
      case NodeKind::kNumber:
        return Value(node.number);
      case NodeKind::kSymbol:
        return resolve(node, env);
      case NodeKind::kIf: {
        const bool c = expect_bool(eval(node.children[0], env), node.loc, "if condition");
        return eval(node.children[c ? 1 : 2], env);
      }
      case NodeKind::kLet: {
        EnvPtr scope = env;
        for (std::size_t i = 0; i < node.names.size(); ++i) {
          auto frame = std::make_shared<Env>();
          frame->value = eval(node.children[i], scope);
          frame->symbol = node.names[i];
          frame->parent = scope;
          scope = std::move(frame);
        }
        return eval(node.children.back(), scope);
      }
      case NodeKind::kLambda: {
        Function fn;
        fn.lambda_node = index;
        fn.env = env;
        return Value(std::move(fn));
      }
      case NodeKind::kAnd:
      case NodeKind::kOr: {
        const bool is_and = node.kind == NodeKind::kAnd;
        for (int child : node.children) {
          const bool v = expect_bool(eval(child, env), ast_.nodes[child].loc,
                                     is_and ? "and" : "or");
          if (v != is_and) return Value(v);
        }
        return Value(is_and);
      }
      case NodeKind::kCall:
        return call(node, env);
    }
    runtime(node.loc, "unknown expression");
  }

  Value resolve(const Node& node, const EnvPtr& env) const {
    if (const Value* v = lookup(env, node.symbol)) return *v;
    const int def = ast_.symbol_def[node.symbol];
    if (def >= 0) {
      Function fn;
      fn.def = def;
      return Value(std::move(fn));
    }
    const int builtin = ast_.symbol_builtin[node.symbol];
    if (builtin >= 0) {
      if (kBuiltins[builtin].id == Builtin::kTrue) return Value(true);
      if (kBuiltins[builtin].id == Builtin::kFalse) return Value(false);
      Function fn;
      fn.builtin = builtin;
      return Value(std::move(fn));
    }
    runtime(node.loc, "unbound symbol `" + ast_.symbols[node.symbol] + "`");
  }

  Value call(const Node& node, const EnvPtr& env) {
    const Value callee = eval(node.children[0], env);
    if (!callee.is_function()) {
      runtime(node.loc, "type mismatch: cannot call a " + type_name(callee));
    }
    std::vector<Value> args;
    args.reserve(node.children.size() - 1);
    for (std::size_t i = 1; i < node.children.size(); ++i) {
      args.push_back(eval(node.children[i], env));
    }
    return apply(std::get<Function>(callee.data), args, node.loc);
  }

  Value apply(const Function& fn, const std::vector<Value>& args, SourceLocation loc) {
    if (fn.builtin >= 0) return call_builtin(fn.builtin, args, loc);
    const std::vector<int>* params = nullptr;
    int body = -1;
    EnvPtr scope;
    if (fn.def >= 0) {
      const Definition& def = ast_.defs[fn.def];
      params = &def.params;
      body = def.body;
    } else {
      const Node& lambda = ast_.nodes[fn.lambda_node];
      params = &lambda.names;
      body = lambda.children[0];
      scope = fn.env;
    }
    if (params->size() != args.size()) {
      const std::string name = fn.def >= 0 ? ast_.symbols[ast_.defs[fn.def].name] : "lambda";
      throw LangError(FailureKind::kArityError, loc,
                      "`" + name + "` expects " + std::to_string(params->size()) +
                          " argument(s), got " + std::to_string(args.size()));
    }
    if (call_depth_ + 1 > limits_.max_call_depth) {
      throw LangError(FailureKind::kDepthExceeded, loc,
                      "call depth exceeded " + std::to_string(limits_.max_call_depth));
    }
    for (std::size_t i = 0; i < args.size(); ++i) {
      auto frame = std::make_shared<Env>();
      frame->symbol = (*params)[i];
      frame->value = args[i];
      frame->parent = std::move(scope);
      scope = std::move(frame);
    }
    ++call_depth_;
    Value result = eval(body, scope);
    --call_depth_;
    return result;
  }

  Value call_builtin(int index, const std::vector<Value>& args, SourceLocation loc) {
    const BuiltinInfo& info = kBuiltins[index];
    const int n = static_cast<int>(args.size());
    if (n < info.min_args || (info.max_args >= 0 && n > info.max_args)) {
      throw LangError(FailureKind::kArityError, loc,
                      "`" + std::string(info.name) + "` does not accept " +
                          std::to_string(n) + " argument(s)");
    }
    const std::string_view name = info.name;
    switch (info.id) {
      case Builtin::kAdd: {
        double acc = 0.0;
        for (const Value& a : args) acc += expect_number(a, loc, name);
        return finite(acc, loc);
      }
      case Builtin::kMul: {
        double acc = 1.0;
        for (const Value& a : args) acc *= expect_number(a, loc, name);
        return finite(acc, loc);
      }
      case Builtin::kSub: {
        double acc = expect_number(args[0], loc, name);
        if (n == 1) return finite(-acc, loc);
        for (int i = 1; i < n; ++i) acc -= expect_number(args[i], loc, name);
        return finite(acc, loc);
      }
      case Builtin::kDiv: {
        double acc = expect_number(args[0], loc, name);
        for (int i = 1; i < n; ++i) {
          const double d = expect_number(args[i], loc, name);
          if (d == 0.0) runtime(loc, "division by zero");
          acc /= d;
        }
        return finite(acc, loc);
      }
      case Builtin::kMod: {
        const double a = expect_number(args[0], loc, name);
        const double b = expect_number(args[1], loc, name);
        if (b == 0.0) runtime(loc, "division by zero in %");
        return finite(std::fmod(a, b), loc);
      }
      case Builtin::kLt:
        return Value(expect_number(args[0], loc, name) < expect_number(args[1], loc, name));
      case Builtin::kLe:
        return Value(expect_number(args[0], loc, name) <= expect_number(args[1], loc, name));
      case Builtin::kGt:
        return Value(expect_number(args[0], loc, name) > expect_number(args[1], loc, name));
      case Builtin::kGe:
        return Value(expect_number(args[0], loc, name) >= expect_number(args[1], loc, name));
      case Builtin::kEq:
      case Builtin::kNe: {
        bool equal = false;
        if (args[0].is_number() && args[1].is_number()) {
          equal = args[0].number() == args[1].number();
        } else if (args[0].is_bool() && args[1].is_bool()) {
          equal = args[0].boolean() == args[1].boolean();
        } else {
          runtime(loc, "type mismatch: `" + std::string(name) + "` compares two numbers or two "
                       "booleans, got " + type_name(args[0]) + " and " + type_name(args[1]));
        }
        return Value(info.id == Builtin::kEq ? equal : !equal);
      }
      case Builtin::kNot:
        return Value(!expect_bool(args[0], loc, name));
      case Builtin::kAbs:
        return Value(std::fabs(expect_number(args[0], loc, name)));
      case Builtin::kFloor:
        return Value(std::floor(expect_number(args[0], loc, name)));
      case Builtin::kMin:
      case Builtin::kMax: {
        const bool is_min = info.id == Builtin::kMin;
        const std::vector<Value>* items = &args;
        if (n == 1 && args[0].is_list()) {
          items = &args[0].list();
          charge(static_cast<std::int64_t>(items->size()), loc);
          if (items->empty()) runtime(loc, "`" + std::string(name) + "` of an empty list");
        }
        double best = expect_number((*items)[0], loc, name);
        for (const Value& v : *items) {
          const double x = expect_number(v, loc, name);
          best = is_min ? std::min(best, x) : std::max(best, x);
        }
        return Value(best);
      }
      case Builtin::kLen:
        return Value(static_cast<double>(expect_list(args[0], loc, name).size()));
      case Builtin::kList:
        charge(n, loc);
        return make_list(List(args.begin(), args.end()));
      case Builtin::kGet: {
        const List& items = expect_list(args[0], loc, name);
        const std::int64_t i = expect_index(args[1], loc, name);
        if (i < 0 || i >= static_cast<std::int64_t>(items.size())) {
          runtime(loc, "index " + std::to_string(i) + " out of bounds (length " +
                           std::to_string(items.size()) + ")");
        }
        return items[static_cast<std::size_t>(i)];
      }
      case Builtin::kAppend: {
        const List& items = expect_list(args[0], loc, name);
        if (static_cast<std::int64_t>(items.size()) + 1 > kMaxListLength) {
          runtime(loc, "list too long");
        }
        charge(static_cast<std::int64_t>(items.size()) + 1, loc);
        List out;
        out.reserve(items.size() + 1);
        out.insert(out.end(), items.begin(), items.end());
        out.push_back(args[1]);
        return make_list(std::move(out));
      }
      case Builtin::kRange: {
        std::int64_t lo = 0;
        std::int64_t hi = expect_index(args[0], loc, name);
        if (n == 2) {
          lo = hi;
          hi = expect_index(args[1], loc, name);
        }
        const std::int64_t count = std::max<std::int64_t>(0, hi - lo);
        if (count > kMaxListLength) runtime(loc, "range too long");
        charge(count, loc);
        List out;
        out.reserve(static_cast<std::size_t>(count));
        for (std::int64_t i = lo; i < hi; ++i) out.emplace_back(static_cast<double>(i));
        return make_list(std::move(out));
      }
      case Builtin::kFold: {
        if (!args[0].is_function()) {
          runtime(loc, "type mismatch: fold expects a function, got " + type_name(args[0]));
        }
        const Function& fn = std::get<Function>(args[0].data);
        const Value list_value = args[2];
        const List& items = expect_list(list_value, loc, name);
        Value acc = args[1];
        std::vector<Value> call_args(2);
        for (const Value& item : items) {
          charge(1, loc);
          call_args[0] = std::move(acc);
          call_args[1] = item;
          acc = apply(fn, call_args, loc);
        }
        return acc;
      }
      case Builtin::kTrue:
        return Value(true);
      case Builtin::kFalse:
        return Value(false);
    }
    runtime(loc, "unknown builtin");
  }

  const Ast& ast_;
  EvalLimits limits_;
  int call_depth_ = 0;
  int nesting_ = 0;
};

std::string hex_sha256(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string location_prefix(FailureKind kind, SourceLocation loc) {
  return std::string(failure_kind_name(kind)) + " at " + std::to_string(loc.line) + ":" +
         std::to_string(loc.col);
}

}  // namespace

SourceText make_source(std::string text) {
  SourceText source;
  source.sha = hex_sha256(text);
  source.text = std::move(text);
  return source;
}

std::string_view failure_kind_name(FailureKind kind) {
  switch (kind) {
    case FailureKind::kParseError: return "ParseError";
    case FailureKind::kArityError: return "ArityError";
    case FailureKind::kRuntimeError: return "RuntimeError";
    case FailureKind::kInvalidDistribution: return "InvalidDistribution";
    case FailureKind::kFuelExhausted: return "FuelExhausted";
    case FailureKind::kDepthExceeded: return "DepthExceeded";
  }
  return "RuntimeError";
}

LangError::LangError(FailureKind kind, SourceLocation loc, std::string detail)
    : Error(errc_for(kind), location_prefix(kind, loc) + " — " + detail),
      kind_(kind),
      loc_(loc),
      detail_(std::move(detail)) {}

Value make_list(List items) { return Value(std::make_shared<const List>(std::move(items))); }

std::string to_string(const Value& value) {
  if (value.is_number()) return format_number(value.number());
  if (value.is_bool()) return value.boolean() ? "true" : "false";
  if (value.is_function()) return "<function>";
  std::string out = "[";
  const List& items = value.list();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += to_string(items[i]);
  }
  return out + "]";
}

bool same_value(const Value& a, const Value& b) {
  if (a.data.index() != b.data.index()) return false;
  if (a.is_number()) {
    return a.number() == b.number() || (std::isnan(a.number()) && std::isnan(b.number()));
  }
  if (a.is_bool()) return a.boolean() == b.boolean();
  if (a.is_function()) {
    const auto& fa = std::get<Function>(a.data);
    const auto& fb = std::get<Function>(b.data);
    return fa.builtin == fb.builtin && fa.def == fb.def && fa.lambda_node == fb.lambda_node;
  }
  const List& la = a.list();
  const List& lb = b.list();
  if (la.size() != lb.size()) return false;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (!same_value(la[i], lb[i])) return false;
  }
  return true;
}

Value evaluate_entry(const PolicyProgram& program, const Value& argument, EvalLimits limits) {
  Evaluator evaluator(program.ast(), limits);
  return evaluator.call_entry(argument);
}

Value history_value(const game::History& history) {
  List states;
  states.reserve(history.states.size());
  for (const auto& s : history.states) {
    states.push_back(make_list(List(s.begin(), s.end())));
  }
  List actions;
  actions.reserve(history.actions.size());
  for (const auto& a : history.actions) {
    actions.push_back(make_list({Value(double(a[0])), Value(double(a[1]))}));
  }
  return make_list({make_list(std::move(states)), make_list(std::move(actions))});
}

std::vector<double> evaluate_policy(const PolicyProgram& program, const game::History& history,
                                    std::int64_t fuel) {
  EvalLimits limits;
  limits.fuel = fuel;
  const Value result = evaluate_entry(program, history_value(history), limits);
  const SourceLocation loc = program.entry().loc;
  if (!result.is_list()) {
    throw LangError(FailureKind::kInvalidDistribution, loc,
                    "policy returned " + to_string(result) + ", expected a list of numbers");
  }
  std::vector<double> out;
  for (const Value& v : result.list()) {
    if (!v.is_number()) {
      throw LangError(FailureKind::kInvalidDistribution, loc,
                      "policy returned " + to_string(result) + ", expected a list of numbers");
    }
    out.push_back(v.number());
  }
  return out;
}

std::vector<double> check_distribution(std::vector<double> dist, int n_actions) {
  const SourceLocation loc{0, 0};
  auto render = [&] {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < dist.size(); ++i) out << (i ? "," : "") << dist[i];
    out << "]";
    return out.str();
  };
  if (static_cast<int>(dist.size()) != n_actions) {
    throw LangError(FailureKind::kInvalidDistribution, loc,
                    "expected " + std::to_string(n_actions) + " probabilities, got " +
                        std::to_string(dist.size()) + " " + render());
  }
  double sum = 0.0;
  for (double p : dist) {
    if (!std::isfinite(p) || p < -1e-9) {
      throw LangError(FailureKind::kInvalidDistribution, loc,
                      "entries must be finite and non-negative: " + render());
    }
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-6) {
    throw LangError(FailureKind::kInvalidDistribution, loc,
                    "probabilities sum to " + format_number(sum) + ", expected 1: " + render());
  }
  double clamped_sum = 0.0;
  for (double& p : dist) {
    if (p < 0.0) p = 0.0;
    clamped_sum += p;
  }
  for (double& p : dist) p /= clamped_sum;
  return dist;
}

int sample(const std::vector<double>& dist, RandomStream& stream) {
  const double u = stream.uniform();
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) last_positive = static_cast<int>(i);
    cumulative += dist[i];
    if (u < cumulative && dist[i] > 0.0) return static_cast<int>(i);
  }
  return last_positive;
}

}  // namespace pibr::lang
