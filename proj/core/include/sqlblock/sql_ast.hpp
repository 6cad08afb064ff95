// Statement trees produced by the SQL parser.
//
// A single node type keeps every consumer (signature extraction, node
// recording) a plain preorder walk. Clause nodes only group their children;
// the leaves and operator nodes carry the facts the firewall cares about.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqlblock::sql {

// Operation codes as written to training logs and profiles. SELECT is 0;
// the rest are fixed so that stored profiles stay readable across versions.
enum class OpCode : int {
  Select = 0,
  Insert = 1,
  Update = 2,
  Delete = 3,
  Replace = 4,
  Call = 5,
  Set = 6,
  Other = 99,
};

const char* op_name(OpCode op);
int op_code(OpCode op);
std::optional<OpCode> op_from_code(int code);
std::optional<OpCode> op_from_name(std::string_view name);

enum class NodeKind {
  Statement,   // text: leading keyword
  Branch,      // one SELECT block of a UNION chain
  SelectList,
  From,
  On,
  Using,
  Where,
  GroupBy,
  Having,
  OrderBy,
  Limit,
  Columns,     // INSERT column list
  Values,
  Row,
  Assignments,
  Assign,      // SET-statement variable assignment: [target, value]
  Into,

  Table,       // base table, text: normalized name
  Column,      // text: column reference as written
  Star,        // `*` or `t.*`
  Literal,     // text: source text
  Function,    // text: canonical name; children: arguments
  Logical,     // text: AND | OR; children: operands
  Subquery,    // child: Statement
  Token,       // raw token of an unstructured statement
};

struct Node {
  NodeKind kind = NodeKind::Token;
  std::string text;
  std::vector<Node> children;

  Node() = default;
  Node(NodeKind k, std::string t = {}) : kind(k), text(std::move(t)) {}

  Node& add(Node child) {
    children.push_back(std::move(child));
    return children.back();
  }
  bool operator==(const Node&) const = default;
};

struct SqlStatement {
  OpCode kind = OpCode::Other;
  Node tree;
  std::string raw;          // statement text, trimmed, without separator
  std::size_t offset = 0;   // byte offset of raw within the parsed input
};

// Debug rendering, e.g. `(Function ">" (Column "id") (Literal "0"))`.
std::string dump(const Node& node);

}  // namespace sqlblock::sql
