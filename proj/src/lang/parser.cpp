#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "builtins.hpp"
#include "pibr/lang.hpp"

namespace pibr::lang {
namespace {

constexpr int kMaxNesting = 200;

struct Datum {
  bool is_list = false;
  std::string atom;
  std::vector<Datum> items;
  SourceLocation loc;
};

[[noreturn]] void fail(SourceLocation loc, std::string message) {
  throw LangError(FailureKind::kParseError, loc, std::move(message));
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Datum> read_all() {
    std::vector<Datum> out;
    skip_space();
    while (pos_ < text_.size()) {
      out.push_back(read(0));
      skip_space();
    }
    return out;
  }

 private:
  SourceLocation here() const { return {line_, col_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Datum read(int depth) {
    Datum d;
    d.loc = here();
    const char c = text_[pos_];
    if (c == ')') fail(d.loc, "unexpected ')'");
    if (c == '(') {
      if (depth >= kMaxNesting) fail(d.loc, "expression nesting deeper than 200");
      d.is_list = true;
      advance();
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) fail(d.loc, "unbalanced '(' opened here is never closed");
        if (text_[pos_] == ')') {
          advance();
          return d;
        }
        d.items.push_back(read(depth + 1));
      }
    }
    while (pos_ < text_.size()) {
      const char a = text_[pos_];
      if (a == '(' || a == ')' || a == ';' || std::isspace(static_cast<unsigned char>(a))) break;
      d.atom.push_back(a);
      advance();
    }
    return d;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool looks_numeric(const std::string& atom) {
  if (atom.empty()) return false;
  std::size_t i = (atom[0] == '-' || atom[0] == '+') ? 1 : 0;
  if (i < atom.size() && atom[i] == '.') ++i;
  return i < atom.size() && std::isdigit(static_cast<unsigned char>(atom[i]));
}

class Builder {
 public:
  std::shared_ptr<Ast> build(const std::vector<Datum>& top) {
    bool have_policy = false;
    for (const Datum& form : top) {
      if (have_policy) fail(form.loc, "nothing may follow the policy form");
      if (!form.is_list || form.items.empty() || form.items[0].is_list) {
        fail(form.loc, "expected (def ...) or (policy ...) at top level");
      }
      const std::string& head = form.items[0].atom;
      if (head == "def") {
        ast_->defs.push_back(definition(form, true));
      } else if (head == "policy") {
        ast_->entry = definition(form, false);
        have_policy = true;
      } else {
        fail(form.loc, "expected (def ...) or (policy ...) at top level, found '" + head + "'");
      }
    }
    if (!have_policy) {
      fail(top.empty() ? SourceLocation{1, 1} : top.back().loc,
           "program has no (policy (h) body) form");
    }
    ast_->symbol_def.assign(ast_->symbols.size(), -1);
    ast_->symbol_builtin.assign(ast_->symbols.size(), -1);
    for (std::size_t s = 0; s < ast_->symbols.size(); ++s) {
      ast_->symbol_builtin[s] = find_builtin(ast_->symbols[s]);
    }
    for (std::size_t d = 0; d < ast_->defs.size(); ++d) {
      const Definition& def = ast_->defs[d];
      if (ast_->symbol_def[def.name] != -1) {
        fail(def.loc, "duplicate definition of '" + ast_->symbols[def.name] + "'");
      }
      ast_->symbol_def[def.name] = static_cast<int>(d);
    }
    return std::move(ast_);
  }

 private:
  int intern(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<int>(ast_->symbols.size()));
    if (inserted) ast_->symbols.push_back(name);
    return it->second;
  }

  int binder(const Datum& d, std::string_view what) {
    if (d.is_list) fail(d.loc, std::string(what) + " must be a symbol");
    if (looks_numeric(d.atom)) fail(d.loc, std::string(what) + " must be a symbol, got number " + d.atom);
    if (is_keyword(d.atom)) fail(d.loc, "keyword '" + d.atom + "' cannot be bound");
    const int b = find_builtin(d.atom);
    if (b >= 0 && kBuiltins[b].constant) fail(d.loc, "constant '" + d.atom + "' cannot be bound");
    return intern(d.atom);
  }

  std::vector<int> param_list(const Datum& d) {
    if (!d.is_list) fail(d.loc, "expected a parameter list");
    std::vector<int> params;
    for (const Datum& p : d.items) {
      const int id = binder(p, "parameter");
      for (int existing : params) {
        if (existing == id) fail(p.loc, "duplicate parameter '" + p.atom + "'");
      }
      params.push_back(id);
    }
    return params;
  }

  Definition definition(const Datum& form, bool is_def) {
    Definition def;
    def.loc = form.loc;
    if (is_def) {
      if (form.items.size() != 4) fail(form.loc, "def takes a name, a parameter list and a body");
      def.name = binder(form.items[1], "definition name");
      if (find_builtin(form.items[1].atom) >= 0) {
        fail(form.items[1].loc, "cannot redefine builtin '" + form.items[1].atom + "'");
      }
      def.params = param_list(form.items[2]);
      def.body = expr(form.items[3]);
    } else {
      if (form.items.size() != 3) fail(form.loc, "policy takes a parameter list and a body");
      def.params = param_list(form.items[1]);
      def.body = expr(form.items[2]);
    }
    return def;
  }

  int add(Node node) {
    ast_->nodes.push_back(std::move(node));
    return static_cast<int>(ast_->nodes.size() - 1);
  }

  int expr(const Datum& d) {
    Node node;
    node.loc = d.loc;
    if (!d.is_list) {
      if (looks_numeric(d.atom)) {
        double value = 0.0;
        const char* first = d.atom.data();
        const char* last = first + d.atom.size();
        if (*first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
          fail(d.loc, "malformed number '" + d.atom + "'");
        }
        node.kind = NodeKind::kNumber;
        node.number = value;
        return add(std::move(node));
      }
      if (is_keyword(d.atom)) fail(d.loc, "keyword '" + d.atom + "' used as a value");
      node.kind = NodeKind::kSymbol;
      node.symbol = intern(d.atom);
      return add(std::move(node));
    }
    if (d.items.empty()) fail(d.loc, "empty application ()");
    const Datum& head = d.items[0];
    const std::string head_name = head.is_list ? std::string() : head.atom;
    if (head_name == "if") {
      if (d.items.size() != 4) fail(d.loc, "if takes exactly a condition and two branches");
      node.kind = NodeKind::kIf;
      for (std::size_t i = 1; i < 4; ++i) node.children.push_back(expr(d.items[i]));
    } else if (head_name == "let") {
      if (d.items.size() != 3 || !d.items[1].is_list) {
        fail(d.loc, "let takes a binding list and a body");
      }
      node.kind = NodeKind::kLet;
      for (const Datum& binding : d.items[1].items) {
        if (!binding.is_list || binding.items.size() != 2) {
          fail(binding.loc, "let binding must be (name expr)");
        }
        node.names.push_back(binder(binding.items[0], "let name"));
        node.children.push_back(expr(binding.items[1]));
      }
      node.children.push_back(expr(d.items[2]));
    } else if (head_name == "lambda") {
      if (d.items.size() != 3) fail(d.loc, "lambda takes a parameter list and a body");
      node.kind = NodeKind::kLambda;
      node.names = param_list(d.items[1]);
      node.children.push_back(expr(d.items[2]));
    } else if (head_name == "and" || head_name == "or") {
      node.kind = head_name == "and" ? NodeKind::kAnd : NodeKind::kOr;
      for (std::size_t i = 1; i < d.items.size(); ++i) node.children.push_back(expr(d.items[i]));
    } else if (head_name == "def" || head_name == "policy") {
      fail(d.loc, "'" + head_name + "' is only allowed at top level");
    } else {
      node.kind = NodeKind::kCall;
      for (const Datum& item : d.items) node.children.push_back(expr(item));
    }
    return add(std::move(node));
  }

  std::shared_ptr<Ast> ast_ = std::make_shared<Ast>();
  std::unordered_map<std::string, int> ids_;
};

}  // namespace

PolicyProgram parse(const SourceText& source) {
  std::vector<Datum> top = Reader(source.text).read_all();
  std::shared_ptr<const Ast> ast = Builder().build(top);
  return PolicyProgram(std::move(ast), source);
}

PolicyProgram parse(std::string_view text) { return parse(make_source(std::string(text))); }

}  // namespace pibr::lang
