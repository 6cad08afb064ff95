#include "sqlblock/sql_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "sqlblock/text_util.hpp"

namespace sqlblock::sql {

namespace {

// Sorted; looked up with binary search.
constexpr auto kReserved = std::to_array<std::string_view>({
    "ALL", "ALTER", "AND", "AS", "ASC", "BETWEEN",
    "BINARY", "BY", "CALL", "CASE", "COLLATE", "CREATE",
    "CROSS", "DEFAULT", "DELAYED", "DELETE", "DESC", "DISTINCT",
    "DISTINCTROW", "DIV", "DROP", "DUAL", "ELSE", "END",
    "ESCAPE", "EXISTS", "FALSE", "FOR", "FORCE", "FROM",
    "GROUP", "HAVING", "HIGH_PRIORITY", "IGNORE", "IN", "INDEX",
    "INNER", "INSERT", "INTERVAL", "INTO", "IS", "JOIN",
    "KEY", "LEFT", "LIKE", "LIMIT", "LOCK", "LOW_PRIORITY",
    "MOD", "NATURAL", "NOT", "NULL", "ON", "OR",
    "ORDER", "OUTER", "REGEXP", "REPLACE", "RIGHT", "RLIKE",
    "SELECT", "SET", "SQL_BIG_RESULT", "SQL_BUFFER_RESULT", "SQL_CALC_FOUND_ROWS", "SQL_SMALL_RESULT",
    "STRAIGHT_JOIN", "TABLE", "THEN", "TRUE", "TRUNCATE", "UNION",
    "UPDATE", "USE", "USING", "VALUES", "WHEN", "WHERE",
    "WITH", "XOR",
});

bool ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}
bool ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    out.reserve(src_.size() / 4 + 4);
    while (pos_ < src_.size()) {
      unsigned char c = src_[pos_];
      if (std::isspace(c)) {
        ++pos_;
        continue;
      }
      std::size_t start = pos_;
      if (in_exec_comment_ && c == '*' && peek(1) == '/') {
        pos_ += 2;
        in_exec_comment_ = false;
        emit(out, TokenKind::Comment, start);
        continue;
      }
      if (c == '#') {
        line_comment();
        emit(out, TokenKind::Comment, start);
        continue;
      }
      if (c == '-' && peek(1) == '-' && (pos_ + 2 >= src_.size() || std::isspace(static_cast<unsigned char>(peek(2))) ||
                                         std::iscntrl(static_cast<unsigned char>(peek(2))))) {
        line_comment();
        emit(out, TokenKind::Comment, start);
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        block_comment(start);
        emit(out, TokenKind::Comment, start);
        continue;
      }
      if (c == '\'' || c == '"') {
        quoted(c, start, LexError::Code::UnterminatedString);
        emit(out, TokenKind::StringLiteral, start);
        continue;
      }
      if (c == '`') {
        quoted('`', start, LexError::Code::UnterminatedIdentifier);
        emit(out, TokenKind::QuotedIdentifier, start);
        continue;
      }
      if ((c == 'x' || c == 'X' || c == 'b' || c == 'B') && peek(1) == '\'') {
        ++pos_;
        quoted('\'', start, LexError::Code::UnterminatedString);
        emit(out, TokenKind::HexLiteral, start);
        continue;
      }
      if (c == '0' && (peek(1) == 'x' || peek(1) == 'b') && pos_ + 2 < src_.size() &&
          std::isxdigit(static_cast<unsigned char>(peek(2)))) {
        pos_ += 2;
        while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && ident_char(src_[pos_])) {
          // 0xZZ or 0x1g is an identifier in MySQL.
          while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
          emit(out, TokenKind::Identifier, start);
        } else {
          emit(out, TokenKind::HexLiteral, start);
        }
        continue;
      }
      if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))) && !after_name(out))) {
        number();
        emit(out, TokenKind::NumericLiteral, start);
        continue;
      }
      if (ident_start(c)) {
        while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
        std::string_view word = src_.substr(start, pos_ - start);
        bool qualified = !out.empty() && out.back().is(TokenKind::Punctuation, ".");
        emit(out, !qualified && is_reserved_word(word) ? TokenKind::Keyword : TokenKind::Identifier, start);
        continue;
      }
      if (c == '@') {
        ++pos_;
        if (peek(0) == '@') ++pos_;
        if (peek(0) == '\'' || peek(0) == '"' || peek(0) == '`') {
          quoted(src_[pos_], start, LexError::Code::UnterminatedString);
        } else {
          while (pos_ < src_.size() && (ident_char(src_[pos_]) || src_[pos_] == '.')) ++pos_;
        }
        emit(out, TokenKind::ParameterMarker, start);
        continue;
      }
      if (c == '?') {
        ++pos_;
        emit(out, TokenKind::ParameterMarker, start);
        continue;
      }
      if (c == '(' || c == ')' || c == ',' || c == ';' || c == '.' || c == '{' || c == '}') {
        ++pos_;
        emit(out, TokenKind::Punctuation, start);
        continue;
      }
      op();
      emit(out, TokenKind::Operator, start);
    }
    if (in_exec_comment_) throw LexError(LexError::Code::UnterminatedComment, exec_comment_start_);
    return out;
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  static bool after_name(const std::vector<Token>& out) {
    if (out.empty()) return false;
    const Token& t = out.back();
    return t.kind == TokenKind::Identifier || t.kind == TokenKind::QuotedIdentifier ||
           t.is(TokenKind::Punctuation, ")");
  }

  void emit(std::vector<Token>& out, TokenKind kind, std::size_t start) {
    out.push_back(Token{kind, src_.substr(start, pos_ - start), start, pos_});
  }

  void line_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
  }

  void block_comment(std::size_t start) {
    if (peek(2) == '!' && !in_exec_comment_) {
      // Executable comment: emit the opener (with optional version digits)
      // and lex the body as SQL.
      pos_ += 3;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      in_exec_comment_ = true;
      exec_comment_start_ = start;
      return;
    }
    pos_ += 2;
    while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) ++pos_;
    if (pos_ + 1 >= src_.size()) throw LexError(LexError::Code::UnterminatedComment, start);
    pos_ += 2;
  }

  void quoted(char q, std::size_t start, LexError::Code code) {
    ++pos_;  // opening quote
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\\' && q != '`') {
        pos_ += 2;
        continue;
      }
      if (c == q) {
        if (peek(1) == q) {
          pos_ += 2;
          continue;
        }
        ++pos_;
        return;
      }
      ++pos_;
    }
    throw LexError(code, start);
  }

  void number() {
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (peek(0) == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if ((peek(0) == 'e' || peek(0) == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek(1))) ||
         ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
      pos_ += 2;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
  }

  void op() {
    static constexpr std::array<std::string_view, 14> kMulti = {
        "<=>", "->>", "<=", ">=", "<>", "!=", "<<", ">>", "&&", "||", ":=", "->", "==", "=>"};
    std::string_view rest = src_.substr(pos_);
    for (std::string_view m : kMulti) {
      if (rest.substr(0, m.size()) == m) {
        pos_ += m.size();
        return;
      }
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  bool in_exec_comment_ = false;
  std::size_t exec_comment_start_ = 0;
};

}  // namespace

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::QuotedIdentifier: return "quoted-identifier";
    case TokenKind::StringLiteral: return "string-literal";
    case TokenKind::NumericLiteral: return "numeric-literal";
    case TokenKind::HexLiteral: return "hex-literal";
    case TokenKind::Operator: return "operator";
    case TokenKind::Punctuation: return "punctuation";
    case TokenKind::Comment: return "comment";
    case TokenKind::ParameterMarker: return "parameter-marker";
  }
  return "?";
}

bool Token::is_keyword(std::string_view upper) const {
  return kind == TokenKind::Keyword && text::iequals(text, upper);
}

LexError::LexError(Code code, std::size_t offset)
    : SqlError([&] {
        switch (code) {
          case Code::UnterminatedString: return "unterminated string literal at offset " + std::to_string(offset);
          case Code::UnterminatedComment: return "unterminated comment at offset " + std::to_string(offset);
          case Code::UnterminatedIdentifier:
            return "unterminated quoted identifier at offset " + std::to_string(offset);
        }
        return std::string("lex error");
      }(),
               offset),
      code_(code) {}

bool is_reserved_word(std::string_view word) {
  if (word.size() > 20) return false;
  char buf[24];
  for (std::size_t i = 0; i < word.size(); ++i) buf[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[i])));
  std::string_view upper(buf, word.size());
  return std::binary_search(kReserved.begin(), kReserved.end(), upper);
}

std::vector<Token> tokenize(std::string_view sql) { return Lexer(sql).run(); }

}  // namespace sqlblock::sql
