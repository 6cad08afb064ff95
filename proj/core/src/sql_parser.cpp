#include "sqlblock/sql_parser.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <utility>

#include "sqlblock/text_util.hpp"

namespace sqlblock::sql {

// ---------------------------------------------------------------------------
// OpCode / Node helpers

const char* op_name(OpCode op) {
  switch (op) {
    case OpCode::Select: return "SELECT";
    case OpCode::Insert: return "INSERT";
    case OpCode::Update: return "UPDATE";
    case OpCode::Delete: return "DELETE";
    case OpCode::Replace: return "REPLACE";
    case OpCode::Call: return "CALL";
    case OpCode::Set: return "SET";
    case OpCode::Other: return "OTHER";
  }
  return "OTHER";
}

int op_code(OpCode op) { return static_cast<int>(op); }

std::optional<OpCode> op_from_code(int code) {
  switch (code) {
    case 0: return OpCode::Select;
    case 1: return OpCode::Insert;
    case 2: return OpCode::Update;
    case 3: return OpCode::Delete;
    case 4: return OpCode::Replace;
    case 5: return OpCode::Call;
    case 6: return OpCode::Set;
    case 99: return OpCode::Other;
    default: return std::nullopt;
  }
}

std::optional<OpCode> op_from_name(std::string_view name) {
  for (OpCode op : {OpCode::Select, OpCode::Insert, OpCode::Update, OpCode::Delete, OpCode::Replace, OpCode::Call,
                    OpCode::Set, OpCode::Other}) {
    if (text::iequals(name, op_name(op))) return op;
  }
  return std::nullopt;
}

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Statement: return "Statement";
    case NodeKind::Branch: return "Branch";
    case NodeKind::SelectList: return "SelectList";
    case NodeKind::From: return "From";
    case NodeKind::On: return "On";
    case NodeKind::Using: return "Using";
    case NodeKind::Where: return "Where";
    case NodeKind::GroupBy: return "GroupBy";
    case NodeKind::Having: return "Having";
    case NodeKind::OrderBy: return "OrderBy";
    case NodeKind::Limit: return "Limit";
    case NodeKind::Columns: return "Columns";
    case NodeKind::Values: return "Values";
    case NodeKind::Row: return "Row";
    case NodeKind::Assignments: return "Assignments";
    case NodeKind::Assign: return "Assign";
    case NodeKind::Into: return "Into";
    case NodeKind::Table: return "Table";
    case NodeKind::Column: return "Column";
    case NodeKind::Star: return "Star";
    case NodeKind::Literal: return "Literal";
    case NodeKind::Function: return "Function";
    case NodeKind::Logical: return "Logical";
    case NodeKind::Subquery: return "Subquery";
    case NodeKind::Token: return "Token";
  }
  return "?";
}

void dump_into(const Node& n, std::ostringstream& os) {
  os << '(' << kind_name(n.kind);
  if (!n.text.empty()) os << " \"" << n.text << '"';
  for (const Node& c : n.children) {
    os << ' ';
    dump_into(c, os);
  }
  os << ')';
}

}  // namespace

std::string dump(const Node& node) {
  std::ostringstream os;
  dump_into(node, os);
  return os.str();
}

ParseError::ParseError(std::size_t offset, std::string expected)
    : SqlError("parse error at offset " + std::to_string(offset) + ": expected " + expected, offset),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Parser

namespace {

std::string unquote_identifier(std::string_view t) {
  if (t.size() >= 2 && t.front() == '`' && t.back() == '`') {
    std::string out;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
      out.push_back(t[i]);
      if (t[i] == '`' && t[i + 1] == '`') ++i;
    }
    return out;
  }
  return std::string(t);
}

// Keywords that may name a function when directly followed by `(`.
bool keyword_function(std::string_view kw) {
  static constexpr std::array<std::string_view, 9> kFns = {"LEFT",    "RIGHT",  "REPLACE", "INSERT", "MOD",
                                                            "DEFAULT", "VALUES", "TRUNCATE", "CHAR"};
  return std::any_of(kFns.begin(), kFns.end(), [&](std::string_view f) { return text::iequals(f, kw); });
}

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> toks) : src_(src), toks_(std::move(toks)) {}

  std::vector<SqlStatement> run() {
    std::vector<SqlStatement> out;
    while (!at_end()) {
      if (peek_punct(";")) {
        ++pos_;
        continue;
      }
      std::size_t first = pos_;
      SqlStatement stmt = statement();
      if (!at_end() && !peek_punct(";")) fail("end of statement");
      std::size_t b = toks_[first].begin;
      std::size_t e = toks_[pos_ - 1].end;
      stmt.raw = std::string(src_.substr(b, e - b));
      stmt.offset = b;
      out.push_back(std::move(stmt));
    }
    return out;
  }

 private:
  // -- token access --------------------------------------------------------

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }
  bool peek_kw(std::string_view kw, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is_keyword(kw);
  }
  // Matches reserved keywords and non-reserved words alike.
  bool peek_word(std::string_view w, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && (t->kind == TokenKind::Keyword || t->kind == TokenKind::Identifier) && text::iequals(t->text, w);
  }
  bool peek_punct(std::string_view p, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is(TokenKind::Punctuation, p);
  }
  bool peek_op(std::string_view o, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is(TokenKind::Operator, o);
  }
  bool accept_kw(std::string_view kw) {
    if (peek_kw(kw)) return ++pos_, true;
    return false;
  }
  bool accept_word(std::string_view w) {
    if (peek_word(w)) return ++pos_, true;
    return false;
  }
  bool accept_punct(std::string_view p) {
    if (peek_punct(p)) return ++pos_, true;
    return false;
  }
  bool accept_op(std::string_view o) {
    if (peek_op(o)) return ++pos_, true;
    return false;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail(std::string(kw));
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail(std::string(w));
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("'" + std::string(p) + "'");
  }
  [[noreturn]] void fail(const std::string& expected) const {
    std::size_t off = at_end() ? src_.size() : toks_[pos_].begin;
    throw ParseError(off, expected);
  }
  const Token& next() {
    if (at_end()) fail("more input");
    return toks_[pos_++];
  }

  bool peek_name() const {
    const Token* t = peek();
    return t && (t->kind == TokenKind::Identifier || t->kind == TokenKind::QuotedIdentifier);
  }
  std::string name() {
    if (!peek_name()) fail("identifier");
    return unquote_identifier(next().text);
  }

  // -- statements ----------------------------------------------------------

  SqlStatement statement() {
    SqlStatement s;
    if (peek_kw("SELECT") || peek_punct("(")) {
      s.kind = OpCode::Select;
      s.tree = select_statement();
    } else if (peek_kw("INSERT")) {
      s.kind = OpCode::Insert;
      s.tree = insert_statement("INSERT");
    } else if (peek_kw("REPLACE")) {
      s.kind = OpCode::Replace;
      s.tree = insert_statement("REPLACE");
    } else if (peek_kw("UPDATE")) {
      s.kind = OpCode::Update;
      s.tree = update_statement();
    } else if (peek_kw("DELETE")) {
      s.kind = OpCode::Delete;
      s.tree = delete_statement();
    } else if (peek_kw("CALL")) {
      s.kind = OpCode::Call;
      s.tree = call_statement();
    } else if (peek_kw("SET")) {
      s.kind = OpCode::Set;
      s.tree = set_statement();
    } else {
      s.kind = OpCode::Other;
      s.tree = flat_statement(text::to_upper(peek()->text));
    }
    return s;
  }

  Node flat_statement(std::string head) {
    Node root(NodeKind::Statement, std::move(head));
    int depth = 0;
    while (!at_end()) {
      if (depth == 0 && peek_punct(";")) break;
      const Token& t = next();
      if (t.is(TokenKind::Punctuation, "(")) ++depth;
      if (t.is(TokenKind::Punctuation, ")")) --depth;
      root.add(Node(NodeKind::Token, std::string(t.text)));
    }
    return root;
  }

  // SELECT [UNION SELECT ...] [ORDER BY] [LIMIT] [locking] [INTO]
  Node select_statement() {
    Node root(NodeKind::Statement, "SELECT");
    root.add(select_branch());
    while (accept_kw("UNION")) {
      if (!accept_kw("ALL")) accept_kw("DISTINCT");
      root.add(select_branch());
    }
    select_tail(root);
    return root;
  }

  Node select_branch() {
    if (accept_punct("(")) {
      Node inner = select_statement();
      expect_punct(")");
      inner.kind = NodeKind::Branch;
      inner.text.clear();
      return inner;
    }
    expect_kw("SELECT");
    Node branch(NodeKind::Branch);
    while (true) {
      const Token* t = peek();
      if (!t) break;
      if (t->is_keyword("ALL") || t->is_keyword("DISTINCT") || t->is_keyword("DISTINCTROW") ||
          t->is_keyword("HIGH_PRIORITY") || t->is_keyword("STRAIGHT_JOIN") ||
          ((t->kind == TokenKind::Keyword || t->kind == TokenKind::Identifier) &&
           text::starts_with_icase(t->text, "SQL_"))) {
        ++pos_;
        continue;
      }
      break;
    }
    Node& list = branch.add(Node(NodeKind::SelectList));
    do {
      list.add(select_item());
    } while (accept_punct(","));

    if (peek_kw("INTO")) branch.add(into_clause());

    Node& from = branch.add(Node(NodeKind::From));
    if (accept_kw("FROM")) {
      if (accept_kw("DUAL")) {
        from.add(Node(NodeKind::Table, "dual"));
      } else {
        table_references(from);
      }
    } else {
      from.add(Node(NodeKind::Table, "dual"));
    }
    if (accept_kw("WHERE")) branch.add(Node(NodeKind::Where)).add(expr());
    if (peek_kw("GROUP")) {
      ++pos_;
      expect_kw("BY");
      Node& g = branch.add(Node(NodeKind::GroupBy));
      do {
        g.add(expr());
        if (!accept_kw("ASC")) accept_kw("DESC");
      } while (accept_punct(","));
      if (accept_kw("WITH")) expect_word("ROLLUP");
    }
    if (accept_kw("HAVING")) branch.add(Node(NodeKind::Having)).add(expr());
    return branch;
  }

  Node select_item() {
    if (accept_op("*")) return Node(NodeKind::Star, "*");
    Node e = expr();
    if (accept_kw("AS")) {
      const Token& a = next();
      if (a.kind != TokenKind::Identifier && a.kind != TokenKind::QuotedIdentifier &&
          a.kind != TokenKind::StringLiteral) {
        --pos_;
        fail("alias");
      }
    } else if (peek_name() || (peek() && peek()->kind == TokenKind::StringLiteral)) {
      ++pos_;
    }
    return e;
  }

  void select_tail(Node& root) {
    order_by(root);
    limit(root);
    while (true) {
      if (peek_kw("FOR")) {
        ++pos_;
        if (!accept_kw("UPDATE")) expect_word("SHARE");
        if (accept_word("OF")) {
          do name(); while (accept_punct(","));
        }
        if (!accept_word("NOWAIT") && accept_word("SKIP")) expect_word("LOCKED");
      } else if (peek_kw("LOCK")) {
        ++pos_;
        expect_kw("IN");
        expect_word("SHARE");
        expect_word("MODE");
      } else if (peek_kw("INTO")) {
        root.add(into_clause());
      } else {
        break;
      }
    }
  }

  // INTO OUTFILE/DUMPFILE writes files on the server, so it is recorded as a
  // function use and must appear in a trained descriptor to be allowed.
  Node into_clause() {
    expect_kw("INTO");
    Node into(NodeKind::Into);
    if (peek_word("OUTFILE") || peek_word("DUMPFILE")) {
      std::string which = text::to_upper(next().text);
      Node fn(NodeKind::Function, "INTO " + which);
      fn.add(primary());
      // FIELDS/LINES export options: consume until the clause ends.
      while (!at_end() && !peek_punct(";") && !peek_punct(")") && !peek_kw("FROM") && !peek_kw("UNION") &&
             !peek_kw("FOR") && !peek_kw("LOCK")) {
        ++pos_;
      }
      into.add(std::move(fn));
      return into;
    }
    Node fn(NodeKind::Function, "INTO");
    do {
      const Token& t = next();
      if (t.kind != TokenKind::ParameterMarker && t.kind != TokenKind::Identifier) {
        --pos_;
        fail("variable");
      }
      fn.add(Node(NodeKind::Literal, std::string(t.text)));
    } while (accept_punct(","));
    into.add(std::move(fn));
    return into;
  }

  void order_by(Node& parent) {
    if (!peek_kw("ORDER")) return;
    ++pos_;
    expect_kw("BY");
    Node& o = parent.add(Node(NodeKind::OrderBy));
    do {
      o.add(expr());
      if (!accept_kw("ASC")) accept_kw("DESC");
    } while (accept_punct(","));
  }

  void limit(Node& parent) {
    if (!accept_kw("LIMIT")) return;
    Node& l = parent.add(Node(NodeKind::Limit));
    l.add(limit_value());
    if (accept_punct(",") || accept_word("OFFSET")) l.add(limit_value());
  }

  Node limit_value() {
    const Token* t = peek();
    if (t && (t->kind == TokenKind::NumericLiteral || t->kind == TokenKind::ParameterMarker)) {
      ++pos_;
      return Node(NodeKind::Literal, std::string(t->text));
    }
    if (peek_name()) return Node(NodeKind::Literal, name());
    fail("row count");
  }

  // table_references: factor { , factor | join }
  void table_references(Node& from) {
    table_factor(from);
    while (true) {
      if (accept_punct(",")) {
        table_factor(from);
        continue;
      }
      if (!join_clause(from)) break;
    }
  }

  bool join_clause(Node& from) {
    bool natural = false;
    if (peek_kw("JOIN") || peek_kw("STRAIGHT_JOIN")) {
      ++pos_;
    } else if (peek_kw("INNER") || peek_kw("CROSS")) {
      ++pos_;
      expect_kw("JOIN");
    } else if (peek_kw("LEFT") || peek_kw("RIGHT")) {
      ++pos_;
      accept_kw("OUTER");
      expect_kw("JOIN");
    } else if (peek_kw("NATURAL")) {
      ++pos_;
      natural = true;
      if (accept_kw("LEFT") || accept_kw("RIGHT")) accept_kw("OUTER");
      else accept_kw("INNER");
      expect_kw("JOIN");
    } else {
      return false;
    }
    table_factor(from);
    if (natural) return true;
    if (accept_kw("ON")) {
      from.add(Node(NodeKind::On)).add(expr());
    } else if (accept_kw("USING")) {
      Node& u = from.add(Node(NodeKind::Using));
      expect_punct("(");
      do u.add(Node(NodeKind::Column, name())); while (accept_punct(","));
      expect_punct(")");
    }
    return true;
  }

  void table_factor(Node& from) {
    if (accept_punct("(")) {
      if (peek_kw("SELECT") || peek_punct("(")) {
        // Derived table, or a parenthesized join list.
        if (peek_kw("SELECT") || looks_like_select_in_parens()) {
          Node sub(NodeKind::Subquery);
          sub.add(select_statement());
          expect_punct(")");
          from.add(std::move(sub));
          table_alias();
          return;
        }
      }
      table_references(from);
      expect_punct(")");
      return;
    }
    if (accept_kw("DUAL")) {
      from.add(Node(NodeKind::Table, "dual"));
      return;
    }
    from.add(Node(NodeKind::Table, table_name()));
    if (accept_word("PARTITION")) skip_parens();
    table_alias();
    index_hints();
  }

  bool looks_like_select_in_parens() const {
    std::size_t i = pos_;
    while (i < toks_.size() && toks_[i].is(TokenKind::Punctuation, "(")) ++i;
    return i < toks_.size() && toks_[i].is_keyword("SELECT");
  }

  void table_alias() {
    if (accept_kw("AS")) {
      name();
    } else if (peek_name()) {
      ++pos_;
    }
  }

  void index_hints() {
    while (peek_kw("USE") || peek_kw("IGNORE") || peek_kw("FORCE")) {
      ++pos_;
      if (!accept_kw("INDEX")) expect_kw("KEY");
      if (accept_kw("FOR")) {
        if (accept_kw("JOIN")) {
        } else if (accept_kw("ORDER") || accept_kw("GROUP")) {
          expect_kw("BY");
        } else {
          fail("JOIN, ORDER BY or GROUP BY");
        }
      }
      skip_parens();
    }
  }

  void skip_parens() {
    expect_punct("(");
    int depth = 1;
    while (depth > 0) {
      const Token& t = next();
      if (t.is(TokenKind::Punctuation, "(")) ++depth;
      if (t.is(TokenKind::Punctuation, ")")) --depth;
    }
  }

  // [db.]name, normalized to the lowercased table part.
  std::string table_name() {
    std::string n = name();
    while (accept_punct(".")) n = name();
    return text::to_lower(n);
  }

  Node insert_statement(const char* head) {
    ++pos_;  // INSERT | REPLACE
    Node root(NodeKind::Statement, head);
    while (accept_kw("LOW_PRIORITY") || accept_kw("DELAYED") || accept_kw("HIGH_PRIORITY") || accept_kw("IGNORE")) {
    }
    accept_kw("INTO");
    root.add(Node(NodeKind::Table, table_name()));
    if (accept_word("PARTITION")) skip_parens();

    if (peek_punct("(") && !looks_like_select_in_parens()) {
      ++pos_;
      Node& cols = root.add(Node(NodeKind::Columns));
      if (!peek_punct(")")) {
        do cols.add(column_ref_node()); while (accept_punct(","));
      }
      expect_punct(")");
    }

    if (accept_kw("VALUES") || accept_word("VALUE")) {
      Node& values = root.add(Node(NodeKind::Values));
      do {
        accept_word("ROW");
        expect_punct("(");
        Node& row = values.add(Node(NodeKind::Row));
        if (!peek_punct(")")) {
          do row.add(expr()); while (accept_punct(","));
        }
        expect_punct(")");
      } while (accept_punct(","));
    } else if (accept_kw("SET")) {
      assignments(root);
    } else if (peek_kw("SELECT") || peek_punct("(")) {
      Node& sub = root.add(Node(NodeKind::Subquery));
      sub.add(select_statement());
    } else if (accept_kw("TABLE")) {
      Node& sub = root.add(Node(NodeKind::Subquery));
      Node& stmt = sub.add(Node(NodeKind::Statement, "TABLE"));
      stmt.add(Node(NodeKind::Table, table_name()));
    } else {
      fail("VALUES, SET or SELECT");
    }

    if (accept_kw("AS")) {
      name();
      if (accept_punct("(")) {
        do name(); while (accept_punct(","));
        expect_punct(")");
      }
    }
    if (accept_kw("ON")) {
      expect_word("DUPLICATE");
      expect_kw("KEY");
      expect_kw("UPDATE");
      assignments(root);
    }
    return root;
  }

  Node update_statement() {
    ++pos_;
    Node root(NodeKind::Statement, "UPDATE");
    while (accept_kw("LOW_PRIORITY") || accept_kw("IGNORE")) {
    }
    Node& from = root.add(Node(NodeKind::From));
    table_references(from);
    expect_kw("SET");
    assignments(root);
    if (accept_kw("WHERE")) root.add(Node(NodeKind::Where)).add(expr());
    order_by(root);
    limit(root);
    return root;
  }

  // col = expr, ... recorded as `=` functions over (column, value).
  void assignments(Node& parent) {
    Node& list = parent.add(Node(NodeKind::Assignments));
    do {
      Node col = column_ref_node();
      if (!accept_op("=") && !accept_op(":=")) fail("'='");
      Node fn(NodeKind::Function, "=");
      fn.add(std::move(col));
      fn.add(expr());
      list.add(std::move(fn));
    } while (accept_punct(","));
  }

  Node delete_statement() {
    ++pos_;
    Node root(NodeKind::Statement, "DELETE");
    while (accept_kw("LOW_PRIORITY") || accept_word("QUICK") || accept_kw("IGNORE")) {
    }
    Node& from = root.add(Node(NodeKind::From));
    if (accept_kw("FROM")) {
      std::vector<std::string> targets;
      do {
        targets.push_back(table_name());
        if (accept_punct(".")) {
          if (!accept_op("*")) fail("'*'");
        }
      } while (accept_punct(","));
      if (accept_kw("USING")) {
        table_references(from);
      } else {
        if (targets.size() != 1) fail("USING");
        from.add(Node(NodeKind::Table, targets.front()));
        if (accept_word("PARTITION")) skip_parens();
        table_alias();
      }
    } else {
      // Multi-table form: targets are names or aliases resolved via FROM.
      do {
        name();
        if (accept_punct(".")) {
          if (!accept_op("*")) name();
          accept_punct(".") && accept_op("*");
        }
      } while (accept_punct(","));
      expect_kw("FROM");
      table_references(from);
    }
    if (accept_kw("WHERE")) root.add(Node(NodeKind::Where)).add(expr());
    order_by(root);
    limit(root);
    return root;
  }

  Node call_statement() {
    ++pos_;
    Node root(NodeKind::Statement, "CALL");
    std::string proc = name();
    while (accept_punct(".")) proc = name();
    Node fn(NodeKind::Function, text::to_upper(proc));
    if (accept_punct("(")) {
      if (!peek_punct(")")) {
        do fn.add(expr()); while (accept_punct(","));
      }
      expect_punct(")");
    }
    root.add(std::move(fn));
    return root;
  }

  Node set_statement() {
    ++pos_;
    Node root(NodeKind::Statement, "SET");
    if (peek_word("NAMES") || peek_word("CHARACTER") || peek_word("CHARSET") || peek_word("TRANSACTION") ||
        peek_word("PASSWORD") || peek_word("ROLE") || peek_word("DEFAULT") ||
        ((peek_word("GLOBAL") || peek_word("SESSION")) && peek_word("TRANSACTION", 1))) {
      while (!at_end() && !peek_punct(";")) root.add(Node(NodeKind::Token, std::string(next().text)));
      return root;
    }
    do {
      Node& assign = root.add(Node(NodeKind::Assign));
      std::string target;
      if (peek_word("GLOBAL") || peek_word("SESSION") || peek_word("LOCAL") || peek_word("PERSIST") ||
          peek_word("PERSIST_ONLY")) {
        target = text::to_upper(next().text) + " ";
      }
      const Token& t = next();
      if (t.kind != TokenKind::ParameterMarker && t.kind != TokenKind::Identifier &&
          t.kind != TokenKind::QuotedIdentifier) {
        --pos_;
        fail("variable");
      }
      target += std::string(t.text);
      while (accept_punct(".")) target += "." + name();
      assign.add(Node(NodeKind::Literal, std::move(target)));
      if (!accept_op("=") && !accept_op(":=")) fail("'='");
      if (accept_kw("DEFAULT")) assign.add(Node(NodeKind::Literal, "DEFAULT"));
      else assign.add(expr());
    } while (accept_punct(","));
    return root;
  }

  Node column_ref_node() {
    std::string col = name();
    while (accept_punct(".")) col += "." + name();
    return Node(NodeKind::Column, std::move(col));
  }

  // -- expressions ---------------------------------------------------------

  Node expr() { return or_expr(); }

  static Node logical(const char* op, Node lhs, Node rhs) {
    if (lhs.kind == NodeKind::Logical && lhs.text == op) {
      lhs.add(std::move(rhs));
      return lhs;
    }
    Node n(NodeKind::Logical, op);
    n.add(std::move(lhs));
    n.add(std::move(rhs));
    return n;
  }

  static Node binary(std::string op, Node lhs, Node rhs) {
    Node n(NodeKind::Function, std::move(op));
    n.add(std::move(lhs));
    n.add(std::move(rhs));
    return n;
  }

  static Node unary(std::string op, Node arg) {
    Node n(NodeKind::Function, std::move(op));
    n.add(std::move(arg));
    return n;
  }

  Node or_expr() {
    Node lhs = xor_expr();
    while (accept_kw("OR") || accept_op("||")) lhs = logical("OR", std::move(lhs), xor_expr());
    return lhs;
  }

  Node xor_expr() {
    Node lhs = and_expr();
    while (accept_kw("XOR")) lhs = binary("XOR", std::move(lhs), and_expr());
    return lhs;
  }

  Node and_expr() {
    Node lhs = not_expr();
    while (accept_kw("AND") || accept_op("&&")) lhs = logical("AND", std::move(lhs), not_expr());
    return lhs;
  }

  Node not_expr() {
    if (accept_kw("NOT")) return unary("NOT", not_expr());
    return predicate();
  }

  bool peek_comparison() const {
    static constexpr std::array<std::string_view, 8> kOps = {"=", "<=>", ">=", ">", "<=", "<", "<>", "!="};
    const Token* t = peek();
    if (!t || t->kind != TokenKind::Operator) return false;
    return std::find(kOps.begin(), kOps.end(), t->text) != kOps.end();
  }

  Node predicate() {
    Node lhs = bit_or();
    while (true) {
      if (peek_kw("IS")) {
        ++pos_;
        bool neg = accept_kw("NOT");
        std::string what;
        if (accept_kw("NULL")) what = "NULL";
        else if (accept_kw("TRUE")) what = "TRUE";
        else if (accept_kw("FALSE")) what = "FALSE";
        else if (accept_word("UNKNOWN")) what = "UNKNOWN";
        else fail("NULL, TRUE, FALSE or UNKNOWN");
        lhs = unary(std::string(neg ? "IS NOT " : "IS ") + what, std::move(lhs));
        continue;
      }
      bool neg = false;
      if (peek_kw("NOT") && (peek_kw("IN", 1) || peek_kw("BETWEEN", 1) || peek_kw("LIKE", 1) ||
                             peek_kw("REGEXP", 1) || peek_kw("RLIKE", 1))) {
        ++pos_;
        neg = true;
      }
      std::string prefix = neg ? "NOT " : "";
      if (accept_kw("IN")) {
        Node fn(NodeKind::Function, prefix + "IN");
        fn.add(std::move(lhs));
        expect_punct("(");
        if (peek_kw("SELECT") || looks_like_select_in_parens()) {
          Node sub(NodeKind::Subquery);
          sub.add(select_statement());
          fn.add(std::move(sub));
        } else {
          do fn.add(expr()); while (accept_punct(","));
        }
        expect_punct(")");
        lhs = std::move(fn);
        continue;
      }
      if (accept_kw("BETWEEN")) {
        Node fn(NodeKind::Function, prefix + "BETWEEN");
        fn.add(std::move(lhs));
        fn.add(bit_or());
        expect_kw("AND");
        fn.add(bit_or());
        lhs = std::move(fn);
        continue;
      }
      if (accept_kw("LIKE")) {
        Node fn = binary(prefix + "LIKE", std::move(lhs), bit_or());
        if (accept_kw("ESCAPE")) fn.add(bit_or());
        lhs = std::move(fn);
        continue;
      }
      if (accept_kw("REGEXP") || accept_kw("RLIKE")) {
        lhs = binary(prefix + "REGEXP", std::move(lhs), bit_or());
        continue;
      }
      if (neg) fail("IN, BETWEEN, LIKE or REGEXP");
      if (peek_word("SOUNDS") && peek_kw("LIKE", 1)) {
        pos_ += 2;
        lhs = binary("SOUNDS LIKE", std::move(lhs), bit_or());
        continue;
      }
      if (peek_comparison()) {
        std::string op(next().text);
        if (op == "!=") op = "<>";
        if (peek_kw("ALL") || peek_word("ANY") || peek_word("SOME")) {
          std::string q = text::to_upper(next().text);
          expect_punct("(");
          Node sub(NodeKind::Subquery);
          sub.add(select_statement());
          expect_punct(")");
          lhs = binary(op + " " + q, std::move(lhs), std::move(sub));
        } else {
          lhs = binary(op, std::move(lhs), bit_or());
        }
        continue;
      }
      if (peek_word("MEMBER") && peek_word("OF", 1)) {
        pos_ += 2;
        expect_punct("(");
        lhs = binary("MEMBER OF", std::move(lhs), expr());
        expect_punct(")");
        continue;
      }
      return lhs;
    }
  }

  Node bit_or() {
    Node lhs = bit_and();
    while (accept_op("|")) lhs = binary("|", std::move(lhs), bit_and());
    return lhs;
  }

  Node bit_and() {
    Node lhs = shift();
    while (accept_op("&")) lhs = binary("&", std::move(lhs), shift());
    return lhs;
  }

  Node shift() {
    Node lhs = additive();
    while (peek_op("<<") || peek_op(">>")) {
      std::string op(next().text);
      lhs = binary(op, std::move(lhs), additive());
    }
    return lhs;
  }

  Node additive() {
    Node lhs = multiplicative();
    while (peek_op("+") || peek_op("-")) {
      std::string op(next().text);
      lhs = binary(op, std::move(lhs), multiplicative());
    }
    return lhs;
  }

  Node multiplicative() {
    Node lhs = bit_xor();
    while (true) {
      std::string op;
      if (peek_op("*") || peek_op("/") || peek_op("%")) op = std::string(next().text);
      else if (accept_kw("DIV")) op = "DIV";
      else if (accept_kw("MOD")) op = "%";
      else break;
      lhs = binary(op, std::move(lhs), bit_xor());
    }
    return lhs;
  }

  Node bit_xor() {
    Node lhs = unary_expr();
    while (accept_op("^")) lhs = binary("^", std::move(lhs), unary_expr());
    return lhs;
  }

  Node unary_expr() {
    if (peek_op("-") || peek_op("+")) {
      bool minus = next().text == "-";
      Node arg = unary_expr();
      if (arg.kind == NodeKind::Literal) {
        if (minus) arg.text.insert(0, "-");
        return arg;
      }
      return minus ? unary("-", std::move(arg)) : arg;
    }
    if (accept_op("~")) return unary("~", unary_expr());
    if (accept_op("!")) return unary("NOT", unary_expr());
    if (accept_kw("BINARY")) return unary("BINARY", unary_expr());
    Node n = primary();
    while (true) {
      if (accept_kw("COLLATE")) {
        next();
        continue;
      }
      if (peek_op("->") || peek_op("->>")) {
        std::string op(next().text);
        n = binary(op, std::move(n), primary());
        continue;
      }
      break;
    }
    return n;
  }

  Node primary() {
    const Token* t = peek();
    if (!t) fail("expression");

    if (t->is(TokenKind::Punctuation, "(")) {
      ++pos_;
      if (peek_kw("SELECT") || looks_like_select_in_parens()) {
        Node sub(NodeKind::Subquery);
        sub.add(select_statement());
        expect_punct(")");
        return sub;
      }
      Node e = expr();
      if (peek_punct(",")) {
        Node row(NodeKind::Function, "ROW");
        row.add(std::move(e));
        while (accept_punct(",")) row.add(expr());
        expect_punct(")");
        return row;
      }
      expect_punct(")");
      return e;
    }

    switch (t->kind) {
      case TokenKind::StringLiteral: {
        ++pos_;
        std::string lit(t->text);
        while (peek() && peek()->kind == TokenKind::StringLiteral) lit += std::string(next().text);
        return Node(NodeKind::Literal, std::move(lit));
      }
      case TokenKind::NumericLiteral:
      case TokenKind::HexLiteral:
      case TokenKind::ParameterMarker:
        ++pos_;
        return Node(NodeKind::Literal, std::string(t->text));
      default:
        break;
    }

    if (t->is_keyword("NULL") || t->is_keyword("TRUE") || t->is_keyword("FALSE") ||
        (t->is_keyword("DEFAULT") && !peek_punct("(", 1))) {
      ++pos_;
      return Node(NodeKind::Literal, text::to_upper(t->text));
    }
    if (t->is_keyword("EXISTS")) {
      ++pos_;
      expect_punct("(");
      Node sub(NodeKind::Subquery);
      sub.add(select_statement());
      expect_punct(")");
      return unary("EXISTS", std::move(sub));
    }
    if (t->is_keyword("CASE")) return case_expr();
    if (t->is_keyword("INTERVAL")) {
      ++pos_;
      Node n = unary("INTERVAL", expr());
      if (!peek_name()) fail("interval unit");
      ++pos_;
      return n;
    }
    if (t->kind == TokenKind::Keyword && keyword_function(t->text) && peek_punct("(", 1)) {
      ++pos_;
      return function_call(text::to_upper(t->text));
    }

    if (t->kind == TokenKind::Identifier) {
      // Typed literals and charset introducers: DATE '2020-01-01', _utf8'x'.
      const Token* n = peek(1);
      if (n && n->kind == TokenKind::StringLiteral &&
          (text::iequals(t->text, "DATE") || text::iequals(t->text, "TIME") ||
           text::iequals(t->text, "TIMESTAMP") || text::iequals(t->text, "N") || t->text.front() == '_')) {
        pos_ += 2;
        return Node(NodeKind::Literal, std::string(t->text) + std::string(n->text));
      }
      if (peek_punct("(", 1)) {
        ++pos_;
        if (text::iequals(t->text, "MATCH")) return match_against();
        return function_call(text::to_upper(t->text));
      }
    }

    if (t->kind == TokenKind::Identifier || t->kind == TokenKind::QuotedIdentifier) {
      std::string col = name();
      while (accept_punct(".")) {
        if (accept_op("*")) return Node(NodeKind::Star, col + ".*");
        col += "." + name();
      }
      return Node(NodeKind::Column, std::move(col));
    }
    if (t->is(TokenKind::Punctuation, "{")) {
      // ODBC escape: { d '2001-01-01' }
      ++pos_;
      if (!peek_name()) fail("ODBC escape type");
      ++pos_;
      Node e = expr();
      expect_punct("}");
      return e;
    }
    fail("expression");
  }

  Node case_expr() {
    ++pos_;
    Node fn(NodeKind::Function, "CASE");
    if (!peek_kw("WHEN")) fn.add(expr());
    while (accept_kw("WHEN")) {
      fn.add(expr());
      expect_kw("THEN");
      fn.add(expr());
    }
    if (accept_kw("ELSE")) fn.add(expr());
    expect_kw("END");
    return fn;
  }

  Node match_against() {
    Node fn(NodeKind::Function, "MATCH");
    expect_punct("(");
    do fn.add(column_ref_node()); while (accept_punct(","));
    expect_punct(")");
    expect_word("AGAINST");
    expect_punct("(");
    fn.add(bit_or());
    while (!at_end() && !peek_punct(")")) ++pos_;  // search modifier
    expect_punct(")");
    return fn;
  }

  // Called with the function name consumed and `(` next.
  Node function_call(std::string fname) {
    expect_punct("(");
    Node fn(NodeKind::Function, fname);
    if (accept_punct(")")) return fn;

    if (fname == "CAST" || fname == "CONVERT") {
      fn.add(expr());
      if (accept_kw("AS") || accept_punct(",") || accept_kw("USING")) skip_until_close();
      expect_punct(")");
      return fn;
    }
    if (fname == "EXTRACT") {
      if (!peek_name()) fail("unit");
      ++pos_;
      expect_kw("FROM");
      fn.add(expr());
      expect_punct(")");
      return fn;
    }
    if (fname == "TRIM") {
      bool spec = accept_word("BOTH") || accept_word("LEADING") || accept_word("TRAILING");
      if (accept_kw("FROM")) {
        fn.add(expr());
      } else {
        fn.add(expr());
        if (accept_kw("FROM")) fn.add(expr());
        else if (spec) fail("FROM");
      }
      expect_punct(")");
      return fn;
    }
    if (fname == "POSITION") {
      fn.add(bit_or());
      expect_kw("IN");
      fn.add(expr());
      expect_punct(")");
      return fn;
    }

    accept_kw("DISTINCT") || accept_kw("ALL");
    if (fname == "COUNT" && accept_op("*")) {
      fn.add(Node(NodeKind::Star, "*"));
      expect_punct(")");
      return fn;
    }
    do {
      fn.add(expr());
      // SUBSTRING(s FROM p FOR n)
      while (accept_kw("FROM") || accept_kw("FOR")) fn.add(expr());
    } while (accept_punct(","));
    if (fname == "GROUP_CONCAT") {
      order_by(fn);
      if (accept_word("SEPARATOR")) fn.add(primary());
    }
    if (fname == "CHAR" && accept_kw("USING")) next();
    expect_punct(")");
    return fn;
  }

  void skip_until_close() {
    int depth = 0;
    while (!at_end()) {
      if (peek_punct(")") && depth == 0) return;
      const Token& t = next();
      if (t.is(TokenKind::Punctuation, "(")) ++depth;
      if (t.is(TokenKind::Punctuation, ")")) --depth;
    }
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<SqlStatement> parse_statements(std::string_view sql) {
  std::vector<Token> toks = tokenize(sql);
  std::erase_if(toks, [](const Token& t) { return t.kind == TokenKind::Comment; });
  return Parser(sql, std::move(toks)).run();
}

}  // namespace sqlblock::sql
