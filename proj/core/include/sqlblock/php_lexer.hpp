// Tokens for the PHP subset the access-layer analysis reads.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sqlblock::php {

class PhpParseError : public std::runtime_error {
 public:
  PhpParseError(std::string file, int line, const std::string& what);
  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }

 private:
  std::string file_;
  int line_;
};

// One piece of a PHP string value: literal text, an interpolated variable,
// or something whose value is not known statically.
struct StrPart {
  enum class Kind { Literal, Var, Call };
  Kind kind = Kind::Literal;
  std::string text;  // literal bytes, or variable name without `$`

  bool operator==(const StrPart&) const = default;
};

enum class PhpTok { Variable, Name, String, Number, Op };

struct PhpToken {
  PhpTok kind;
  std::string text;             // Variable: name without `$`; Name: as written; Op: operator
  std::vector<StrPart> parts;   // String: decoded value
  int line = 1;

  bool is_op(std::string_view o) const { return kind == PhpTok::Op && text == o; }
  bool is_name(std::string_view n) const;  // case-insensitive
};

// Tokenizes PHP code blocks; inline HTML, comments and attributes are dropped.
std::vector<PhpToken> lex_php(std::string_view source, const std::string& file);

}  // namespace sqlblock::php
