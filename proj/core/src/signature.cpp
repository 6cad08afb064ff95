#include "sqlblock/signature.hpp"

#include <algorithm>
#include <map>

#include "sqlblock/text_util.hpp"

namespace sqlblock::sql {

const char* arg_kind_name(ArgKind k) {
  switch (k) {
    case ArgKind::Field: return "FIELD";
    case ArgKind::Literal: return "LITERAL";
    case ArgKind::Var: return "VAR";
    case ArgKind::None: return "NONE";
  }
  return "NONE";
}

std::optional<ArgKind> arg_kind_from_name(std::string_view s) {
  for (ArgKind k : {ArgKind::Field, ArgKind::Literal, ArgKind::Var, ArgKind::None}) {
    if (s == arg_kind_name(k)) return k;
  }
  return std::nullopt;
}

const char* cond_name(Cond c) {
  switch (c) {
    case Cond::None: return "none";
    case Cond::And: return "and";
    case Cond::Or: return "or";
    case Cond::Both: return "both";
  }
  return "none";
}

std::optional<Cond> cond_from_name(std::string_view s) {
  for (Cond c : {Cond::None, Cond::And, Cond::Or, Cond::Both}) {
    if (s == cond_name(c)) return c;
  }
  return std::nullopt;
}

std::set<FuncKey> QuerySignature::func_keys() const {
  std::set<FuncKey> out;
  for (const auto& f : funcs) out.insert(f.key());
  return out;
}

ArgKind classify_arg(const Node& arg) {
  return arg.kind == NodeKind::Column || arg.kind == NodeKind::Star ? ArgKind::Field : ArgKind::Literal;
}

FunctionUse function_use(const Node& fn) {
  FunctionUse u;
  u.name = fn.text;
  u.argc = static_cast<int>(fn.children.size());
  if (fn.children.empty()) return u;
  u.first = classify_arg(fn.children.front());
  for (std::size_t i = 1; i < fn.children.size(); ++i) {
    ArgKind k = classify_arg(fn.children[i]);
    if (i == 1) u.rest = k;
    else if (u.rest != k) u.rest = ArgKind::Var;
  }
  return u;
}

namespace {

void collect(const Node& n, QuerySignature& sig, std::map<FuncKey, FunctionUse>& funcs) {
  switch (n.kind) {
    case NodeKind::Table:
      sig.tables.insert(n.text);
      break;
    case NodeKind::Logical:
      sig.logic = sig.logic | (n.text == "AND" ? Cond::And : Cond::Or);
      break;
    case NodeKind::Function: {
      FunctionUse u = function_use(n);
      funcs.try_emplace(u.key(), u);
      break;
    }
    case NodeKind::Token:
      if (text::iequals(n.text, "AND") || n.text == "&&") sig.logic = sig.logic | Cond::And;
      if (text::iequals(n.text, "OR") || n.text == "||") sig.logic = sig.logic | Cond::Or;
      break;
    default:
      break;
  }
  for (const Node& c : n.children) collect(c, sig, funcs);
}

bool is_compound(const Node& n) { return n.kind != NodeKind::Column && n.kind != NodeKind::Star && n.kind != NodeKind::Literal; }

void record(const Node& n, std::vector<std::string>& out) {
  switch (n.kind) {
    case NodeKind::Column:
    case NodeKind::Star:
      out.emplace_back("FIELD");
      return;
    case NodeKind::Literal:
      out.emplace_back("LITERAL");
      return;
    case NodeKind::Function:
      out.push_back("FUNC:" + n.text);
      out.push_back(std::to_string(n.children.size()));
      for (const Node& c : n.children) out.emplace_back(arg_kind_name(classify_arg(c)));
      // Leaf arguments are already described by their kind token.
      for (const Node& c : n.children) {
        if (is_compound(c)) record(c, out);
      }
      return;
    case NodeKind::Logical:
      out.push_back("COND:" + n.text);
      break;
    default:
      break;
  }
  for (const Node& c : n.children) record(c, out);
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s.push_back(sep);
    s += parts[i];
  }
  return s;
}

}  // namespace

QuerySignature extract_signature(const SqlStatement& stmt) {
  QuerySignature sig;
  sig.op = stmt.kind;
  std::map<FuncKey, FunctionUse> funcs;
  collect(stmt.tree, sig, funcs);
  sig.funcs.reserve(funcs.size());
  for (auto& [k, u] : funcs) sig.funcs.push_back(std::move(u));
  return sig;
}

std::string node_info(const SqlStatement& stmt) {
  std::vector<std::string> toks;
  record(stmt.tree, toks);
  return join(toks, '@');
}

std::string node_info(const std::vector<SqlStatement>& stmts) {
  std::vector<std::string> parts;
  for (const auto& s : stmts) {
    std::string p = node_info(s);
    parts.push_back(p.empty() ? "-" : std::move(p));
  }
  return join(parts, ';');
}

std::string table_op(const std::vector<SqlStatement>& stmts) {
  std::vector<std::string> parts;
  for (const auto& s : stmts) {
    QuerySignature sig = extract_signature(s);
    std::string t = sig.tables.empty()
                        ? std::string("-")
                        : join(std::vector<std::string>(sig.tables.begin(), sig.tables.end()), ',');
    parts.push_back(t + "@" + std::to_string(op_code(s.kind)));
  }
  return join(parts, ';');
}

}  // namespace sqlblock::sql
