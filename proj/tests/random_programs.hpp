#pragma once

#include <random>
#include <string>
#include <vector>

#include "pibr/lang.hpp"

// Random well-formed policy programs for interpreter fuzzing. They are
// syntactically valid but freely ill-typed, divergent or enormous.
namespace pibr::testing {

class ProgramGenerator {
 public:
  explicit ProgramGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string program() {
    scope_ = {"h"};
    std::string out =
        "(def count-down (n) (if (<= n 0) 0 (+ 1 (count-down (- n 1)))))\n"
        "(def forever (n) (forever (+ n 1)))\n"
        "(def twice (f x) (f (f x)))\n";
    out += "(policy (h) " + expr(static_cast<int>(pick(2, 6))) + ")";
    return out;
  }

 private:
  std::uint64_t pick(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
  }

  std::string number() {
    static const std::vector<std::string> specials{"0", "1", "-1", "2", "3", "0.5", "1e6", "-7.25",
                                                   "1000000", "1e308"};
    if (pick(0, 3) == 0) return specials[pick(0, specials.size() - 1)];
    return std::to_string(static_cast<int>(pick(0, 40)) - 10);
  }

  std::string leaf() {
    switch (pick(0, 5)) {
      case 0: return scope_[pick(0, scope_.size() - 1)];
      case 1: return pick(0, 1) ? "true" : "false";
      case 2: return "(get h 0)";
      default: return number();
    }
  }

  std::string fresh() { return "v" + std::to_string(counter_++); }

  std::string expr(int depth) {
    if (depth <= 0) return leaf();
    const int d = depth - 1;
    switch (pick(0, 21)) {
      case 0: return "(+ " + expr(d) + " " + expr(d) + ")";
      case 1: return "(- " + expr(d) + " " + expr(d) + ")";
      case 2: return "(* " + expr(d) + " " + expr(d) + ")";
      case 3: return "(/ " + expr(d) + " " + expr(d) + ")";
      case 4: return "(% " + expr(d) + " " + expr(d) + ")";
      case 5: return "(< " + expr(d) + " " + expr(d) + ")";
      case 6: return "(= " + expr(d) + " " + expr(d) + ")";
      case 7: return "(if " + expr(d) + " " + expr(d) + " " + expr(d) + ")";
      case 8: {
        const std::string name = fresh();
        const std::string bound = expr(d);
        scope_.push_back(name);
        std::string body = expr(d);
        scope_.pop_back();
        return "(let ((" + name + " " + bound + ")) " + body + ")";
      }
      case 9: {
        const std::string name = fresh();
        scope_.push_back(name);
        std::string body = expr(d);
        scope_.pop_back();
        return "((lambda (" + name + ") " + body + ") " + expr(d) + ")";
      }
      case 10: return "(list " + expr(d) + " " + expr(d) + " " + expr(d) + ")";
      case 11: return "(get " + expr(d) + " " + expr(d) + ")";
      case 12: return "(append " + expr(d) + " " + expr(d) + ")";
      case 13: return "(range " + expr(d) + ")";
      case 14: {
        const std::string acc = fresh();
        const std::string x = fresh();
        scope_.push_back(acc);
        scope_.push_back(x);
        std::string body = expr(d);
        scope_.pop_back();
        scope_.pop_back();
        return "(fold (lambda (" + acc + " " + x + ") " + body + ") " + expr(d) + " " + expr(d) +
               ")";
      }
      case 15: return "(len " + expr(d) + ")";
      case 16: return "(count-down " + expr(d) + ")";
      case 17: return pick(0, 3) == 0 ? "(forever " + expr(d) + ")" : leaf();
      case 18: return "(and " + expr(d) + " " + expr(d) + ")";
      case 19: return "(or " + expr(d) + " " + expr(d) + ")";
      case 20: return "(min " + expr(d) + " " + expr(d) + ")";
      default: {
        const std::string name = fresh();
        scope_.push_back(name);
        std::string body = expr(d);
        scope_.pop_back();
        return "(twice (lambda (" + name + ") " + body + ") " + expr(d) + ")";
      }
    }
  }

  std::mt19937_64 rng_;
  std::vector<std::string> scope_;
  int counter_ = 0;
};

// Outcome of one evaluation: the printed value or the error text.
inline std::string outcome(const lang::PolicyProgram& program, const lang::Value& argument) {
  try {
    return "value " + lang::to_string(lang::evaluate_entry(program, argument));
  } catch (const lang::LangError& e) {
    return std::string("error ") + e.what();
  }
}

}  // namespace pibr::testing
