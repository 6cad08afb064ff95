#include "sqlblock/php_lexer.hpp"

#include <array>
#include <cctype>

#include "sqlblock/text_util.hpp"

namespace sqlblock::php {

PhpParseError::PhpParseError(std::string file, int line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

bool PhpToken::is_name(std::string_view n) const { return kind == PhpTok::Name && text::iequals(text, n); }

namespace {

bool name_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || u >= 0x80;
}
bool name_char(char c) { return name_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

constexpr std::array<std::string_view, 34> kOps = {
    "<<=", ">>=", "**=", "...", "<=>", "===", "!==", "?\?=", "?->", "->", "=>", "::",
    "==",  "!=",  "<>",  "<=",  ">=",  "&&",  "||",  "++",  "--",  "+=", "-=", "*=",
    "/=",  ".=",  "%=",  "&=",  "|=",  "^=",  "<<",  ">>",  "??",  "**"};

class Lexer {
 public:
  Lexer(std::string_view src, const std::string& file) : s_(src), file_(file) {}

  std::vector<PhpToken> run() {
    html();
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (c == '\n') {
        ++line_;
        ++i_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i_;
      } else if (s_.compare(i_, 2, "?>") == 0) {
        i_ += 2;
        emit_op(";");  // a close tag terminates the statement
        html();
      } else if (c == '#' && peek(1) == '[') {
        attribute();
      } else if (c == '#' || s_.compare(i_, 2, "//") == 0) {
        line_comment();
      } else if (s_.compare(i_, 2, "/*") == 0) {
        block_comment();
      } else if (c == '$' && name_start(peek(1))) {
        std::size_t b = ++i_;
        while (i_ < s_.size() && name_char(s_[i_])) ++i_;
        push(PhpTok::Variable, std::string(s_.substr(b, i_ - b)));
      } else if (name_start(c) || (c == '\\' && name_start(peek(1)))) {
        name();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        number();
      } else if (c == '\'') {
        single_quoted();
      } else if (c == '"') {
        ++i_;
        double_quoted('"');
      } else if (c == '`') {
        ++i_;
        double_quoted('`');
        out_.back().parts = {{StrPart::Kind::Call, "`"}};
      } else if (s_.compare(i_, 3, "<<<") == 0) {
        heredoc();
      } else {
        op();
      }
    }
    return std::move(out_);
  }

 private:
  char peek(std::size_t ahead) const { return i_ + ahead < s_.size() ? s_[i_ + ahead] : '\0'; }

  [[noreturn]] void fail(const std::string& what) const { throw PhpParseError(file_, line_, what); }

  void push(PhpTok k, std::string text, std::vector<StrPart> parts = {}) {
    out_.push_back(PhpToken{k, std::move(text), std::move(parts), line_});
  }
  void emit_op(std::string_view o) { push(PhpTok::Op, std::string(o)); }

  void count_lines(std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to && k < s_.size(); ++k) {
      if (s_[k] == '\n') ++line_;
    }
  }

  // Skips inline HTML up to the next open tag.
  void html() {
    std::size_t open = s_.find("<?", i_);
    if (open == std::string_view::npos) {
      count_lines(i_, s_.size());
      i_ = s_.size();
      return;
    }
    count_lines(i_, open);
    i_ = open + 2;
    if (s_.compare(i_, 3, "php") == 0 || s_.compare(i_, 3, "PHP") == 0) {
      i_ += 3;
    } else if (peek(0) == '=') {
      ++i_;
    }
  }

  void line_comment() {
    while (i_ < s_.size() && s_[i_] != '\n') {
      if (s_.compare(i_, 2, "?>") == 0) return;
      ++i_;
    }
  }

  void block_comment() {
    std::size_t end = s_.find("*/", i_ + 2);
    if (end == std::string_view::npos) fail("unterminated comment");
    count_lines(i_, end);
    i_ = end + 2;
  }

  void attribute() {
    int depth = 0;
    while (i_ < s_.size()) {
      char c = s_[i_++];
      if (c == '\n') ++line_;
      if (c == '[') ++depth;
      if (c == ']' && --depth == 0) return;
    }
    fail("unterminated attribute");
  }

  void name() {
    std::size_t b = i_;
    if (s_[i_] == '\\') ++i_;
    while (i_ < s_.size()) {
      if (name_char(s_[i_])) {
        ++i_;
      } else if (s_[i_] == '\\' && name_start(peek(1))) {
        ++i_;
      } else {
        break;
      }
    }
    push(PhpTok::Name, std::string(s_.substr(b, i_ - b)));
  }

  void number() {
    std::size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' || s_[i_] == '_')) {
      if (s_[i_] == '.' && !std::isdigit(static_cast<unsigned char>(peek(1)))) break;
      ++i_;
    }
    push(PhpTok::Number, std::string(s_.substr(b, i_ - b)));
  }

  void single_quoted() {
    int start = line_;
    ++i_;
    std::string v;
    while (true) {
      if (i_ >= s_.size()) throw PhpParseError(file_, start, "unterminated string");
      char c = s_[i_++];
      if (c == '\'') break;
      if (c == '\n') ++line_;
      if (c == '\\' && (peek(0) == '\'' || peek(0) == '\\')) c = s_[i_++];
      v.push_back(c);
    }
    push(PhpTok::String, {}, {{StrPart::Kind::Literal, std::move(v)}});
  }

  // Interpolating string body after the opening quote, up to `close`.
  void double_quoted(char close) {
    int start = line_;
    std::vector<StrPart> parts;
    std::string lit;
    auto flush = [&] {
      if (!lit.empty()) parts.push_back({StrPart::Kind::Literal, std::move(lit)});
      lit.clear();
    };
    while (true) {
      if (i_ >= s_.size()) throw PhpParseError(file_, start, "unterminated string");
      char c = s_[i_];
      if (c == close) {
        ++i_;
        break;
      }
      if (c == '\n') ++line_;
      if (c == '\\' && i_ + 1 < s_.size()) {
        lit.push_back(unescape(s_[i_ + 1]));
        i_ += 2;
        continue;
      }
      if (interpolation(parts, flush)) continue;
      lit.push_back(c);
      ++i_;
    }
    flush();
    push(PhpTok::String, {}, std::move(parts));
  }

  static char unescape(char e) {
    switch (e) {
      case 'n': return '\n';
      case 't': return '\t';
      case 'r': return '\r';
      case 'v': return '\v';
      case 'f': return '\f';
      case '0': return '\0';
      default: return e;
    }
  }

  // Handles `$var`, `$var->prop`, `$var[..]`, `{$expr}` and `${name}` at i_.
  template <typename Flush>
  bool interpolation(std::vector<StrPart>& parts, Flush& flush) {
    char c = s_[i_];
    if (c == '$' && name_start(peek(1))) {
      flush();
      std::size_t b = ++i_;
      while (i_ < s_.size() && name_char(s_[i_])) ++i_;
      std::string var(s_.substr(b, i_ - b));
      if (peek(0) == '[') {
        std::size_t end = s_.find(']', i_);
        i_ = end == std::string_view::npos ? s_.size() : end + 1;
        parts.push_back({StrPart::Kind::Call, var});
      } else if (peek(0) == '-' && peek(1) == '>' && name_start(peek(2))) {
        i_ += 2;
        std::size_t pb = i_;
        while (i_ < s_.size() && name_char(s_[i_])) ++i_;
        parts.push_back({StrPart::Kind::Var, var + "->" + std::string(s_.substr(pb, i_ - pb))});
      } else {
        parts.push_back({StrPart::Kind::Var, var});
      }
      return true;
    }
    if ((c == '{' && peek(1) == '$') || (c == '$' && peek(1) == '{')) {
      flush();
      std::size_t b = i_ + 2;
      int depth = 1;
      i_ += 2;
      while (i_ < s_.size() && depth > 0) {
        if (s_[i_] == '{') ++depth;
        if (s_[i_] == '}') --depth;
        if (s_[i_] == '\n') ++line_;
        ++i_;
      }
      std::string inner(s_.substr(b, i_ - 1 - b));
      bool simple = !inner.empty();
      for (char ch : inner) simple = simple && name_char(ch);
      parts.push_back({simple ? StrPart::Kind::Var : StrPart::Kind::Call, inner});
      return true;
    }
    return false;
  }

  void heredoc() {
    i_ += 3;
    while (peek(0) == ' ' || peek(0) == '\t') ++i_;
    bool nowdoc = peek(0) == '\'';
    bool quoted = nowdoc || peek(0) == '"';
    if (quoted) ++i_;
    std::size_t b = i_;
    while (i_ < s_.size() && name_char(s_[i_])) ++i_;
    std::string id(s_.substr(b, i_ - b));
    if (id.empty()) fail("bad heredoc label");
    if (quoted) ++i_;
    std::size_t nl = s_.find('\n', i_);
    if (nl == std::string_view::npos) fail("unterminated heredoc");
    int start = line_;
    std::size_t body = nl + 1;

    // Find the closing label: optional indentation, label, then a non-name char.
    std::size_t pos = body;
    std::size_t close = std::string_view::npos;
    std::size_t after = 0;
    while (pos <= s_.size()) {
      std::size_t k = pos;
      while (k < s_.size() && (s_[k] == ' ' || s_[k] == '\t')) ++k;
      if (s_.compare(k, id.size(), id) == 0 && (k + id.size() >= s_.size() || !name_char(s_[k + id.size()]))) {
        close = pos;
        after = k + id.size();
        break;
      }
      std::size_t next = s_.find('\n', pos);
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    if (close == std::string_view::npos) throw PhpParseError(file_, start, "unterminated heredoc");
    std::string_view content = s_.substr(body, close > body ? close - body - 1 : 0);
    count_lines(i_, after);

    if (nowdoc) {
      push(PhpTok::String, {}, {{StrPart::Kind::Literal, std::string(content)}});
    } else {
      // Reuse the interpolating scanner with a sentinel that never occurs.
      std::string padded(content);
      padded.push_back('\x01');
      Lexer inner(padded, file_);
      inner.double_quoted('\x01');
      push(PhpTok::String, {}, std::move(inner.out_.back().parts));
    }
    i_ = after;
  }

  void op() {
    for (std::string_view o : kOps) {
      if (s_.compare(i_, o.size(), o) == 0) {
        emit_op(o);
        i_ += o.size();
        return;
      }
    }
    emit_op(s_.substr(i_, 1));
    ++i_;
  }

  std::string_view s_;
  const std::string& file_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::vector<PhpToken> out_;
};

}  // namespace

std::vector<PhpToken> lex_php(std::string_view source, const std::string& file) { return Lexer(source, file).run(); }

}  // namespace sqlblock::php
