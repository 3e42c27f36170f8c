#pragma once

#include <array>
#include <string_view>

namespace pibr::lang {

enum class Builtin {
  kAdd, kSub, kMul, kDiv, kMod,
  kLt, kLe, kGt, kGe, kEq, kNe,
  kNot, kAbs, kMin, kMax, kFloor,
  kLen, kList, kGet, kAppend, kRange, kFold,
  kTrue, kFalse,
};

struct BuiltinInfo {
  std::string_view name;
  Builtin id;
  int min_args;
  int max_args;  // -1: variadic
  bool constant;
};

inline constexpr std::array<BuiltinInfo, 24> kBuiltins{{
    {"+", Builtin::kAdd, 0, -1, false},
    {"-", Builtin::kSub, 1, -1, false},
    {"*", Builtin::kMul, 0, -1, false},
    {"/", Builtin::kDiv, 2, -1, false},
    {"%", Builtin::kMod, 2, 2, false},
    {"<", Builtin::kLt, 2, 2, false},
    {"<=", Builtin::kLe, 2, 2, false},
    {">", Builtin::kGt, 2, 2, false},
    {">=", Builtin::kGe, 2, 2, false},
    {"=", Builtin::kEq, 2, 2, false},
    {"!=", Builtin::kNe, 2, 2, false},
    {"not", Builtin::kNot, 1, 1, false},
    {"abs", Builtin::kAbs, 1, 1, false},
    {"min", Builtin::kMin, 1, -1, false},
    {"max", Builtin::kMax, 1, -1, false},
    {"floor", Builtin::kFloor, 1, 1, false},
    {"len", Builtin::kLen, 1, 1, false},
    {"list", Builtin::kList, 0, -1, false},
    {"get", Builtin::kGet, 2, 2, false},
    {"append", Builtin::kAppend, 2, 2, false},
    {"range", Builtin::kRange, 1, 2, false},
    {"fold", Builtin::kFold, 3, 3, false},
    {"true", Builtin::kTrue, 0, 0, true},
    {"false", Builtin::kFalse, 0, 0, true},
}};

inline int find_builtin(std::string_view name) {
  for (std::size_t i = 0; i < kBuiltins.size(); ++i) {
    if (kBuiltins[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

inline bool is_keyword(std::string_view name) {
  return name == "if" || name == "let" || name == "lambda" || name == "and" ||
         name == "or" || name == "def" || name == "policy";
}

}  // namespace pibr::lang
