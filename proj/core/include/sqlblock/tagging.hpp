// Call-stack tags carried as a trailing SQL comment:
//   <sql> # <innermost>@...@<outermost>
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/dal.hpp"

namespace sqlblock::tag {

class TagError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class InvalidFrame : public TagError {
 public:
  explicit InvalidFrame(const std::string& frame);
};

class MissingTag : public TagError {
 public:
  MissingTag() : TagError("query carries no call-stack tag") {}
};

using Frames = std::vector<std::string>;

bool valid_frame(std::string_view frame) noexcept;

std::string encode_tag(std::string_view sql, const Frames& frames);

struct Decoded {
  std::string sql;
  Frames frames;
};

// Splits on the last ` # ` that is not inside a string, quoted identifier
// or block comment. Throws MissingTag.
Decoded decode_tag(std::string_view tagged);
std::optional<Decoded> try_decode_tag(std::string_view tagged);

struct Attribution {
  std::string identity;
  bool all_in_dal = false;  // every frame was access layer; outermost used
};

// Frame `Class::method` is skipped when Class is an access-layer class;
// any frame is skipped when it names a database procedure.
Attribution attribute(const Frames& frames, const php::DalSet& dal);

}  // namespace sqlblock::tag
