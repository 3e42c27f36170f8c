#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "pibr/harness.hpp"

namespace pibr::harness {
namespace {

using IntList = std::vector<long long>;
using Value = std::variant<long long, double, bool, std::string, IntList>;

struct Entry {
  Value value;
  int line = 0;
};

std::string trim(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(const std::string& s) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Value parse_value(const std::string& key, const std::string& raw, int line) {
  auto bad = [&](const std::string& why) {
    return Error(Errc::kTypeMismatch, key + " (line " + std::to_string(line) + "): " + why);
  };
  if (raw.empty()) throw bad("missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw bad("unterminated string");
    return raw.substr(1, raw.size() - 2);
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '[') {
    if (raw.back() != ']') throw bad("unterminated list");
    IntList items;
    std::istringstream in(raw.substr(1, raw.size() - 2));
    for (std::string item; std::getline(in, item, ',');) {
      const std::optional<long long> v = parse_int(trim(item));
      if (!v) throw bad("list items must be integers");
      items.push_back(*v);
    }
    return items;
  }
  if (auto v = parse_int(raw)) return *v;
  if (auto v = parse_real(raw)) return *v;
  throw bad("unrecognized value '" + raw + "' (quote strings)");
}

class Table {
 public:
  explicit Table(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    const Value& v = it->second.value;
    if constexpr (std::is_same_v<T, double>) {
      if (auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
    }
    if constexpr (std::is_same_v<T, int>) {
      if (auto* i = std::get_if<long long>(&v)) return static_cast<int>(*i);
      throw mismatch(key, "integer");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (auto* i = std::get_if<long long>(&v); i && *i >= 0) return static_cast<std::uint64_t>(*i);
      throw mismatch(key, "non-negative integer");
    } else {
      if (auto* x = std::get_if<T>(&v)) return *x;
      throw mismatch(key, type_name<T>());
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (std::optional<T> v = get<T>(key)) return *v;
    throw Error(Errc::kMissingKey, "missing required key " + key);
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        throw Error(Errc::kUnknownKey,
                    "unknown key " + key + " (line " + std::to_string(entry.line) + ")");
      }
    }
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "number";
    else if constexpr (std::is_same_v<T, bool>) return "boolean";
    else if constexpr (std::is_same_v<T, std::string>) return "quoted string";
    else return "integer list";
  }

  Error mismatch(const std::string& key, const std::string& expected) const {
    return Error(Errc::kTypeMismatch, key + ": expected " + expected + " (line " +
                                          std::to_string(entries_.at(key).line) + ")");
  }

  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

ops::OperatorKind operator_kind(const std::string& key, const std::string& name) {
  for (ops::OperatorKind k : {ops::OperatorKind::kOracleBR, ops::OperatorKind::kOracleProposer,
                              ops::OperatorKind::kOracleForage, ops::OperatorKind::kLLM}) {
    if (ops::operator_kind_name(k) == name) return k;
  }
  throw Error(Errc::kInvalidConfig,
              key + ": unknown operator kind '" + name +
                  "' (oracle_br, oracle_proposer, oracle_forage, llm)");
}

ops::OperatorConfig read_operator(Table& t, const std::string& prefix) {
  ops::OperatorConfig op;
  op.kind = operator_kind(prefix + ".kind", t.require<std::string>(prefix + ".kind"));
  if (auto v = t.get<std::string>(prefix + ".llm.base_url")) op.llm.base_url = *v;
  if (auto v = t.get<std::string>(prefix + ".llm.model")) op.llm.model = *v;
  if (auto v = t.get<double>(prefix + ".llm.temperature")) op.llm.temperature = *v;
  if (auto v = t.get<int>(prefix + ".llm.max_retries")) op.llm.max_retries = *v;
  if (auto v = t.get<int>(prefix + ".llm.timeout_s")) op.llm.timeout_s = *v;
  if (auto v = t.get<int>(prefix + ".llm.backoff_ms")) op.llm.backoff_ms = *v;
  if (auto v = t.get<int>(prefix + ".forage.eval_episodes")) op.forage.eval_episodes = *v;
  if (auto v = t.get<int>(prefix + ".forage.template_budget")) op.forage.template_budget = *v;
  return op;
}

}  // namespace

Config parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    // Comments start at a '#' outside a string.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) {
      throw Error(Errc::kInvalidConfig, "line " + std::to_string(line_no) + ": empty key");
    }
    if (entries.count(key)) {
      throw Error(Errc::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    entries[key] = {parse_value(key, trim(body.substr(eq + 1)), line_no), line_no};
  }

  Table t(std::move(entries));
  Config config;
  game::GameConfig& g = config.game;
  g.name = t.require<std::string>("game.kind");
  if (g.name == "penalty") g.p = t.require<double>("game.p");
  else g.p = t.get<double>("game.p");
  g.rounds = t.get<int>("game.rounds");
  g.grid_rows = t.get<int>("game.grid_rows");
  g.grid_cols = t.get<int>("game.grid_cols");
  g.n_foods = t.get<int>("game.n_foods");
  if (auto levels = t.get<IntList>("game.agent_levels")) {
    if (levels->size() != game::kNumAgents) {
      throw Error(Errc::kTypeMismatch, "game.agent_levels: expected a list of 2 integers");
    }
    g.agent_levels = std::array<int, game::kNumAgents>{static_cast<int>((*levels)[0]),
                                                       static_cast<int>((*levels)[1])};
  }
  g.t_max = t.get<int>("game.t_max");
  g.penalty_lambda = t.get<double>("game.penalty_lambda");

  engine::PibrSettings& s = config.run.settings;
  if (auto v = t.get<int>("pibr.K")) s.outer_steps = *v;
  if (auto v = t.get<int>("pibr.T")) s.inner_steps = *v;
  if (auto v = t.get<int>("pibr.E")) s.eval_episodes = *v;
  if (auto v = t.get<std::uint64_t>("pibr.seed")) s.seed = *v;
  if (auto v = t.get<std::string>("pibr.inner_return")) {
    if (*v == "last") s.inner_return = engine::InnerReturn::kLast;
    else if (*v == "best") s.inner_return = engine::InnerReturn::kBest;
    else throw Error(Errc::kInvalidConfig, "pibr.inner_return: expected \"last\" or \"best\"");
  }
  if (s.outer_steps < 1) throw Error(Errc::kInvalidConfig, "pibr.K must be >= 1");
  if (s.inner_steps < 1) throw Error(Errc::kInvalidConfig, "pibr.T must be >= 1");
  if (s.eval_episodes < 1) throw Error(Errc::kInvalidConfig, "pibr.E must be >= 1");

  config.run.operators[0] = read_operator(t, "operator0");
  config.run.operators[1] = read_operator(t, "operator1");
  if (auto v = t.get<std::string>("output.dir")) config.output_dir = *v;
  if (auto v = t.get<bool>("output.timing")) config.timing = *v;
  t.reject_unused();

  config.run.game = game::make_game(g);
  return config;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot read config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace pibr::harness
