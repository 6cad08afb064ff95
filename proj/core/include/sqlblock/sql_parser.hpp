#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/sql_ast.hpp"
#include "sqlblock/sql_lexer.hpp"

namespace sqlblock::sql {

class ParseError : public SqlError {
 public:
  ParseError(std::size_t offset, std::string expected);
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::string expected_;
};

// Parses `sql` into statements split on top-level `;`. Empty statements are
// dropped. SELECT, INSERT, UPDATE, DELETE, REPLACE, CALL and SET are parsed
// structurally; any other statement becomes OpCode::Other with a flat list of
// Token children. Throws LexError or ParseError.
std::vector<SqlStatement> parse_statements(std::string_view sql);

}  // namespace sqlblock::sql
