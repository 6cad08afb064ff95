// Per-statement facts used for permission checks, and the node_info line
// recorded during training.
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/sql_ast.hpp"

namespace sqlblock::sql {

enum class ArgKind : std::uint8_t { Field, Literal, Var, None };

const char* arg_kind_name(ArgKind k);
std::optional<ArgKind> arg_kind_from_name(std::string_view s);

// Logical-operator set, as a two-bit mask.
enum class Cond : std::uint8_t { None = 0, And = 1, Or = 2, Both = 3 };

inline Cond operator|(Cond a, Cond b) {
  return static_cast<Cond>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
inline bool cond_subset(Cond a, Cond b) {
  return (static_cast<std::uint8_t>(a) & ~static_cast<std::uint8_t>(b)) == 0;
}
const char* cond_name(Cond c);  // none | and | or | both
std::optional<Cond> cond_from_name(std::string_view s);

// The identity a permission is keyed on. argc is deliberately not part of it.
struct FuncKey {
  std::string name;
  ArgKind first = ArgKind::None;
  ArgKind rest = ArgKind::None;

  auto operator<=>(const FuncKey&) const = default;
  bool operator==(const FuncKey&) const = default;
};

struct FunctionUse {
  std::string name;
  int argc = 0;
  ArgKind first = ArgKind::None;
  ArgKind rest = ArgKind::None;

  FuncKey key() const { return {name, first, rest}; }
};

struct QuerySignature {
  OpCode op = OpCode::Other;
  std::set<std::string> tables;
  Cond logic = Cond::None;
  // Sorted by key, one entry per key; argc is from the first occurrence.
  std::vector<FunctionUse> funcs;

  std::set<FuncKey> func_keys() const;
};

// Classification of one argument node: FIELD for column references, LITERAL
// for everything else (constants, markers, nested calls, subqueries).
ArgKind classify_arg(const Node& arg);

// Builds the use record for a Function node.
FunctionUse function_use(const Node& fn);

QuerySignature extract_signature(const SqlStatement& stmt);

// Preorder kind tokens for one statement, e.g. FIELD@FUNC:>@2@FIELD@LITERAL.
std::string node_info(const SqlStatement& stmt);

// node_info over several statements: parts joined by `;`, `-` for an empty part.
std::string node_info(const std::vector<SqlStatement>& stmts);

// `<t1>,<t2>@<opcode>` per statement, joined by `;`; `-` for no tables.
std::string table_op(const std::vector<SqlStatement>& stmts);

}  // namespace sqlblock::sql
