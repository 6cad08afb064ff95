// Declarations extracted from one PHP file. Bodies are read only for the
// facts the access-layer analysis needs: returns, assignments, calls.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/php_lexer.hpp"

namespace sqlblock::php {

struct StringExpr {
  std::vector<StrPart> parts;

  bool operator==(const StringExpr&) const = default;
};

struct PhpExpr {
  enum class Kind {
    Unknown,  // anything outside the subset
    String,   // str holds the value
    New,      // str holds the class-name expression
    Var,      // name: variable, `this->prop` for properties
    Call,     // name: callee identity (`f` or `Class::m`); empty if dynamic
  };
  Kind kind = Kind::Unknown;
  StringExpr str;
  std::string name;
  bool chained = false;  // followed by ->method() calls

  bool operator==(const PhpExpr&) const = default;
};

struct AssignRecord {
  std::string variable;
  PhpExpr value;
  std::string scope;  // identity of the enclosing function or method
  int line = 0;
};

struct ReturnExpr {
  PhpExpr value;
  int line = 0;
};

enum class DeclKind { Class, Interface, Function, Method };

struct PhpDecl {
  DeclKind kind = DeclKind::Function;
  std::string name;
  std::vector<std::string> extends;     // a class has at most one
  std::vector<std::string> implements;  // classes only
  std::optional<std::string> owner;     // methods only
  std::vector<ReturnExpr> returns;
  std::vector<AssignRecord> assigns;
  std::vector<std::string> calls;       // plain function calls, as written
  std::string file;
  int line = 0;

  std::string identity() const { return owner ? *owner + "::" + name : name; }
};

// Throws PhpParseError on malformed input.
std::vector<PhpDecl> parse_php(std::string_view source, const std::string& file);

}  // namespace sqlblock::php
