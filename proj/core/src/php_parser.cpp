#include "sqlblock/php_parser.hpp"

#include <array>
#include <utility>

#include "sqlblock/text_util.hpp"

namespace sqlblock::php {

namespace {

std::string last_segment(std::string_view name) {
  std::size_t k = name.rfind('\\');
  return std::string(k == std::string_view::npos ? name : name.substr(k + 1));
}

bool is_cast(std::string_view n) {
  static constexpr std::array<std::string_view, 9> kCasts = {"int",   "integer", "bool",  "boolean", "float",
                                                              "double", "string", "array", "object"};
  for (auto c : kCasts) {
    if (text::iequals(c, n)) return true;
  }
  return false;
}

class Parser {
 public:
  Parser(std::vector<PhpToken> toks, const std::string& file) : t_(std::move(toks)), file_(file) {}

  std::vector<PhpDecl> run() {
    scan(kNoDecl, false);
    return std::move(out_);
  }

 private:
  static constexpr std::size_t kNoDecl = static_cast<std::size_t>(-1);

  struct ClassCtx {
    std::string name;
    std::string parent;
  };

  bool at_end() const { return i_ >= t_.size(); }
  const PhpToken* peek(std::size_t ahead = 0) const { return i_ + ahead < t_.size() ? &t_[i_ + ahead] : nullptr; }
  bool peek_op(std::string_view o, std::size_t ahead = 0) const {
    const PhpToken* t = peek(ahead);
    return t && t->is_op(o);
  }
  bool peek_name(std::size_t ahead = 0) const {
    const PhpToken* t = peek(ahead);
    return t && t->kind == PhpTok::Name;
  }
  bool prev_op(std::string_view o) const { return i_ > 0 && t_[i_ - 1].is_op(o); }
  bool prev_name(std::string_view n) const { return i_ > 0 && t_[i_ - 1].is_name(n); }
  int line() const { return at_end() ? (t_.empty() ? 1 : t_.back().line) : t_[i_].line; }

  [[noreturn]] void fail(const std::string& what) const { throw PhpParseError(file_, line(), what); }

  void expect_op(std::string_view o) {
    if (!peek_op(o)) fail("expected '" + std::string(o) + "'");
    ++i_;
  }

  // Skips a balanced group starting at the current open bracket.
  void skip_group() {
    const std::string open = t_[i_].text;
    const std::string close = open == "(" ? ")" : open == "[" ? "]" : "}";
    int depth = 0;
    while (!at_end()) {
      const PhpToken& t = t_[i_++];
      if (t.kind != PhpTok::Op) continue;
      if (t.text == open || (open == "{" && t.text == "${")) ++depth;
      else if (t.text == close && --depth == 0) return;
    }
    fail("unbalanced '" + open + "'");
  }

  bool at_terminator() const {
    const PhpToken* t = peek();
    if (!t) return true;
    return t->is_op(";") || t->is_op(",") || t->is_op(")") || t->is_op("]") || t->is_op("}");
  }

  void skip_to_terminator() {
    while (!at_end() && !at_terminator()) {
      if (peek_op("(") || peek_op("[") || peek_op("{")) skip_group();
      else ++i_;
    }
  }

  std::string resolve_class_word(std::string_view w) const {
    if (!cls_.empty()) {
      if (text::iequals(w, "self") || text::iequals(w, "static")) return cls_.back().name;
      if (text::iequals(w, "parent") && !cls_.back().parent.empty()) return cls_.back().parent;
    }
    return last_segment(w);
  }

  std::string owner_name() const { return cls_.empty() ? std::string() : cls_.back().name; }

  // -- declarations --------------------------------------------------------

  bool at_classlike() const {
    if (i_ > 0 && (t_[i_ - 1].is_op("::") || t_[i_ - 1].is_op("->") || t_[i_ - 1].is_name("new"))) return false;
    std::size_t k = 0;
    while (peek(k) && (peek(k)->is_name("abstract") || peek(k)->is_name("final") || peek(k)->is_name("readonly"))) {
      ++k;
    }
    const PhpToken* t = peek(k);
    if (!t || !(t->is_name("class") || t->is_name("interface") || t->is_name("trait") || t->is_name("enum"))) {
      return false;
    }
    return peek_name(k + 1);
  }

  void classlike() {
    while (peek()->is_name("abstract") || peek()->is_name("final") || peek()->is_name("readonly")) ++i_;
    const PhpToken& kw = t_[i_++];
    PhpDecl d;
    d.kind = kw.is_name("interface") ? DeclKind::Interface : DeclKind::Class;
    d.name = last_segment(t_[i_++].text);
    d.file = file_;
    d.line = kw.line;
    bool trait = kw.is_name("trait");
    if (kw.is_name("enum") && peek_op(":")) i_ += 2;  // backed enum type
    if (peek() && peek()->is_name("extends")) {
      ++i_;
      do {
        if (!peek_name()) fail("expected class name after extends");
        d.extends.push_back(last_segment(t_[i_++].text));
      } while (peek_op(",") && (++i_, true));
    }
    if (peek() && peek()->is_name("implements")) {
      ++i_;
      do {
        if (!peek_name()) fail("expected interface name after implements");
        d.implements.push_back(last_segment(t_[i_++].text));
      } while (peek_op(",") && (++i_, true));
    }
    if (!peek_op("{")) fail("expected '{' after " + d.name);
    if (trait) {
      skip_group();  // trait methods have no class of their own to hang off
      return;
    }
    ++i_;
    cls_.push_back({d.name, d.kind == DeclKind::Class && !d.extends.empty() ? d.extends.front() : std::string()});
    out_.push_back(std::move(d));
    class_body();
    cls_.pop_back();
  }

  void class_body() {
    while (true) {
      if (at_end()) fail("unterminated class body");
      if (peek_op("}")) {
        ++i_;
        return;
      }
      if (peek()->is_name("function")) {
        function_decl(true);
      } else if (peek_op("{") || peek_op("(") || peek_op("[")) {
        skip_group();
      } else {
        ++i_;
      }
    }
  }

  bool at_named_function() const {
    if (!peek() || !peek()->is_name("function")) return false;
    if (i_ > 0 && (t_[i_ - 1].is_op("->") || t_[i_ - 1].is_op("::"))) return false;
    std::size_t k = peek_op("&", 1) ? 2 : 1;
    return peek_name(k) && peek_op("(", k + 1);
  }

  void function_decl(bool method) {
    int ln = t_[i_].line;
    ++i_;
    if (peek_op("&")) ++i_;
    if (!peek_name()) fail("expected function name");
    PhpDecl d;
    d.kind = method ? DeclKind::Method : DeclKind::Function;
    d.name = t_[i_++].text;
    if (method) d.owner = owner_name();
    d.file = file_;
    d.line = ln;
    if (!peek_op("(")) fail("expected '(' after function name");
    skip_group();
    while (!at_end() && !peek_op("{") && !peek_op(";")) ++i_;  // return type
    if (at_end()) fail("expected function body");
    std::size_t idx = out_.size();
    out_.push_back(std::move(d));
    if (peek_op(";")) {
      ++i_;
      return;
    }
    ++i_;
    // Named functions declared inside a method are global functions.
    std::vector<ClassCtx> saved;
    if (!method) saved.swap(cls_);
    scan(idx, true);
    if (!method) saved.swap(cls_);
  }

  void closure() {
    bool arrow = peek()->is_name("fn");
    ++i_;
    if (peek_op("&")) ++i_;
    if (!peek_op("(")) fail("expected closure parameters");
    skip_group();
    if (arrow) return;  // the body expression is scanned in place
    if (peek() && peek()->is_name("use")) {
      ++i_;
      if (peek_op("(")) skip_group();
    }
    while (!at_end() && !peek_op("{")) ++i_;
    if (at_end()) fail("expected closure body");
    skip_group();
  }

  // Scans statements up to the matching `}` (or end of file at top level),
  // collecting declarations and, inside a function, its body facts.
  void scan(std::size_t decl, bool until_brace) {
    while (true) {
      if (at_end()) {
        if (until_brace) fail("missing '}'");
        return;
      }
      const PhpToken& t = t_[i_];
      cur_ = decl;
      if (t.is_op("}")) {
        if (!until_brace) fail("unmatched '}'");
        ++i_;
        return;
      }
      if (t.is_op("{") || t.is_op("${")) {
        ++i_;
        scan(decl, true);
        continue;
      }
      if (at_classlike()) {
        classlike();
        continue;
      }
      if (at_named_function()) {
        function_decl(false);
        continue;
      }
      if ((t.is_name("function") || t.is_name("fn")) && (peek_op("(", 1) || (peek_op("&", 1) && peek_op("(", 2))) &&
          !(i_ > 0 && (t_[i_ - 1].is_op("->") || t_[i_ - 1].is_op("::")))) {
        closure();
        continue;
      }
      if (t.is_name("new") && peek_name(1) && t_[i_ + 1].is_name("class")) {
        // Anonymous class: skip its constructor args and body.
        i_ += 2;
        while (!at_end() && !peek_op("{")) {
          if (peek_op("(")) skip_group();
          else ++i_;
        }
        if (!at_end()) skip_group();
        continue;
      }
      if (decl != kNoDecl) {
        if (t.is_name("return")) {
          int ln = t.line;
          ++i_;
          PhpExpr e = at_terminator() ? PhpExpr{} : expr();
          out_[decl].returns.push_back({std::move(e), ln});
          continue;
        }
        if (assignment(decl)) continue;
        if (t.kind == PhpTok::Name && peek_op("(", 1) && !prev_op("->") && !prev_op("?->") && !prev_op("::") &&
            !prev_name("new") && !prev_name("function")) {
          out_[decl].calls.push_back(last_segment(t.text));
        }
      }
      ++i_;
    }
  }

  bool assignment(std::size_t decl) {
    const PhpToken& t = t_[i_];
    if (t.kind != PhpTok::Variable) return false;
    std::string var = t.text;
    std::size_t k = 1;
    if (var == "this" && peek_op("->", 1) && peek_name(2)) {
      var = "this->" + t_[i_ + 2].text;
      k = 3;
    }
    bool append = peek_op(".=", k);
    if (!append && !peek_op("=", k)) return false;
    if (peek_op("&", k + 1)) ++k;  // reference assignment
    int ln = t.line;
    i_ += k + 1;
    PhpExpr value = expr();
    if (append) value = concat({PhpExpr{PhpExpr::Kind::Var, {}, var, false}, std::move(value)});
    AssignRecord rec;
    rec.variable = std::move(var);
    rec.value = std::move(value);
    rec.scope = out_[decl].identity();
    rec.line = ln;
    out_[decl].assigns.push_back(std::move(rec));
    return true;
  }

  // -- expressions ---------------------------------------------------------

  static void append_parts(const PhpExpr& e, std::vector<StrPart>& parts) {
    switch (e.kind) {
      case PhpExpr::Kind::String:
        parts.insert(parts.end(), e.str.parts.begin(), e.str.parts.end());
        break;
      case PhpExpr::Kind::Var:
        parts.push_back({StrPart::Kind::Var, e.name});
        break;
      default:
        parts.push_back({StrPart::Kind::Call, e.kind == PhpExpr::Kind::Call ? e.name : std::string()});
        break;
    }
  }

  static PhpExpr concat(std::vector<PhpExpr> ops) {
    if (ops.size() == 1) return std::move(ops.front());
    PhpExpr out;
    out.kind = PhpExpr::Kind::String;
    for (const PhpExpr& e : ops) append_parts(e, out.str.parts);
    return out;
  }

  PhpExpr expr() {
    std::vector<PhpExpr> ops;
    while (true) {
      ops.push_back(operand());
      if (peek_op(".")) {
        ++i_;
        continue;
      }
      if (at_terminator()) break;
      skip_to_terminator();
      return PhpExpr{};
    }
    return concat(std::move(ops));
  }

  void record_call(const std::string& name) {
    if (cur_ != kNoDecl) out_[cur_].calls.push_back(name);
  }

  PhpExpr operand() {
    const PhpToken* t = peek();
    if (!t || at_terminator()) return PhpExpr{};
    PhpExpr e;
    switch (t->kind) {
      case PhpTok::String:
        ++i_;
        e.kind = PhpExpr::Kind::String;
        e.str.parts = t->parts;
        return e;
      case PhpTok::Number:
        ++i_;
        e.kind = PhpExpr::Kind::String;
        e.str.parts = {{StrPart::Kind::Literal, t->text}};
        return e;
      case PhpTok::Variable: {
        std::string v = t->text;
        ++i_;
        if (v == "this" && peek_op("->") && peek_name(1)) {
          std::string member = t_[i_ + 1].text;
          i_ += 2;
          if (peek_op("(")) {
            skip_group();
            e.kind = PhpExpr::Kind::Call;
            e.name = cls_.empty() ? std::string() : cls_.back().name + "::" + member;
          } else {
            e.kind = PhpExpr::Kind::Var;
            e.name = "this->" + member;
          }
          return chain(std::move(e));
        }
        if (peek_op("->") || peek_op("?->") || peek_op("[") || peek_op("(") || peek_op("::")) {
          e.kind = PhpExpr::Kind::Call;  // dynamic: value unknown
          return chain(std::move(e), true);
        }
        e.kind = PhpExpr::Kind::Var;
        e.name = std::move(v);
        return e;
      }
      case PhpTok::Name:
        return name_operand();
      case PhpTok::Op:
        break;
    }
    if (t->is_op("(")) {
      if (peek_name(1) && is_cast(t_[i_ + 1].text) && peek_op(")", 2)) {
        i_ += 3;
        return operand();
      }
      ++i_;
      PhpExpr inner = expr();
      expect_op(")");
      return chain(std::move(inner));
    }
    if (t->is_op("@")) {
      ++i_;
      return operand();
    }
    if (t->is_op("[")) {
      skip_group();
      return PhpExpr{};
    }
    return PhpExpr{};
  }

  PhpExpr name_operand() {
    const PhpToken& t = t_[i_++];
    PhpExpr e;
    if (t.is_name("new")) return new_expr();
    if (peek_op("::")) {
      std::string cls = resolve_class_word(t.text);
      ++i_;
      if (peek_name() && t_[i_].is_name("class")) {
        ++i_;
        e.kind = PhpExpr::Kind::String;
        e.str.parts = {{StrPart::Kind::Literal, cls}};
        return e;
      }
      if (peek_name() && peek_op("(", 1)) {
        std::string m = t_[i_].text;
        i_ += 1;
        skip_group();
        e.kind = PhpExpr::Kind::Call;
        e.name = cls + "::" + m;
        return chain(std::move(e));
      }
      skip_to_terminator_of_operand();
      return PhpExpr{};
    }
    if (peek_op("(")) {
      std::string fn = last_segment(t.text);
      record_call(fn);
      skip_group();
      e.kind = PhpExpr::Kind::Call;
      e.name = std::move(fn);
      return chain(std::move(e));
    }
    return PhpExpr{};  // constant
  }

  void skip_to_terminator_of_operand() {
    while (!at_end() && !at_terminator() && !peek_op(".")) {
      if (peek_op("(") || peek_op("[") || peek_op("{")) skip_group();
      else ++i_;
    }
  }

  PhpExpr new_expr() {
    PhpExpr e;
    e.kind = PhpExpr::Kind::New;
    const PhpToken* t = peek();
    if (!t) fail("expected class after new");
    if (t->kind == PhpTok::Name) {
      ++i_;
      e.str.parts = {{StrPart::Kind::Literal, resolve_class_word(t->text)}};
    } else if (t->kind == PhpTok::Variable) {
      ++i_;
      std::string v = t->text;
      if (v == "this" && peek_op("->") && peek_name(1)) {
        v = "this->" + t_[i_ + 1].text;
        i_ += 2;
      }
      e.str.parts = {{StrPart::Kind::Var, v}};
    } else if (t->is_op("(")) {
      ++i_;
      PhpExpr inner = expr();
      expect_op(")");
      append_parts(inner, e.str.parts);
    } else {
      fail("expected class after new");
    }
    if (peek_op("(")) skip_group();
    return chain(std::move(e));
  }

  // Member accesses and calls following an operand.
  PhpExpr chain(PhpExpr e, bool dynamic = false) {
    bool any = false;
    while (true) {
      if ((peek_op("->") || peek_op("?->")) && (peek_name(1) || (peek(1) && peek(1)->kind == PhpTok::Variable))) {
        i_ += 2;
        if (peek_op("(")) skip_group();
        any = true;
      } else if (peek_op("::") && (peek_name(1) || (peek(1) && peek(1)->kind == PhpTok::Variable))) {
        i_ += 2;
        if (peek_op("(")) skip_group();
        any = true;
      } else if (peek_op("[") || peek_op("(") || peek_op("{")) {
        skip_group();
        any = true;
      } else {
        break;
      }
    }
    if (!any && !dynamic) return e;
    if (e.kind == PhpExpr::Kind::New || (e.kind == PhpExpr::Kind::Call && !dynamic)) {
      e.chained = e.chained || any;
      return e;
    }
    PhpExpr unknown;
    unknown.kind = PhpExpr::Kind::Call;
    return unknown;
  }

  std::vector<PhpToken> t_;
  const std::string& file_;
  std::size_t i_ = 0;
  std::size_t cur_ = kNoDecl;
  std::vector<ClassCtx> cls_;
  std::vector<PhpDecl> out_;
};

}  // namespace

std::vector<PhpDecl> parse_php(std::string_view source, const std::string& file) {
  return Parser(lex_php(source, file), file).run();
}

}  // namespace sqlblock::php
