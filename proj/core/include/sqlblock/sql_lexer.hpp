// Tokenizer for the MySQL dialect accepted by the firewall.
//
// Tokens are views into the caller's buffer; the buffer must outlive them.
// Whitespace is not materialized, but token spans are exact, so the input can
// be reconstructed byte-for-byte from the token stream plus the gaps.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sqlblock::sql {

enum class TokenKind {
  Keyword,
  Identifier,
  QuotedIdentifier,
  StringLiteral,
  NumericLiteral,
  HexLiteral,
  Operator,
  Punctuation,
  Comment,
  ParameterMarker,
};

const char* to_string(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string_view text;
  std::size_t begin = 0;  // byte offset of text in the source
  std::size_t end = 0;    // one past the last byte

  // Case-insensitive comparison against an upper-case keyword.
  bool is_keyword(std::string_view upper) const;
  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
};

// Base for every failure to turn SQL text into statements.
class SqlError : public std::runtime_error {
 public:
  SqlError(const std::string& what, std::size_t offset) : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class LexError : public SqlError {
 public:
  enum class Code { UnterminatedString, UnterminatedComment, UnterminatedIdentifier };
  LexError(Code code, std::size_t offset);
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Splits `sql` into tokens, comments included. MySQL executable comments
// (`/*!50001 ... */`) are not opaque: their opener and closer are emitted as
// comments and the body is tokenized as ordinary SQL, matching how the server
// executes them.
std::vector<Token> tokenize(std::string_view sql);

// True for reserved words the parser treats structurally.
bool is_reserved_word(std::string_view word);

}  // namespace sqlblock::sql
