// Per-function permission profiles and their on-disk form.
#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/signature.hpp"
#include "sqlblock/text_util.hpp"

namespace sqlblock::profile {

struct QueryDescriptor {
  sql::OpCode op = sql::OpCode::Other;
  std::set<std::string> tables;
  sql::Cond cond = sql::Cond::None;
  std::set<sql::FuncKey> funcs;

  bool operator==(const QueryDescriptor&) const = default;
  bool operator<(const QueryDescriptor& o) const;
};

QueryDescriptor descriptor_from_signature(const sql::QuerySignature& sig);

// `<opcode>|<t1,t2>|<cond>|<name:FIRST:REST;...>`
std::string format_descriptor(const QueryDescriptor& d);

using DescriptorSet = std::set<QueryDescriptor>;

struct Profile {
  std::map<std::string, DescriptorSet, text::ICaseLess> entries;
  std::string dal_fingerprint;  // 16 hex digits, empty if unknown

  const DescriptorSet* find(std::string_view identity) const;
  bool operator==(const Profile&) const = default;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

inline constexpr std::string_view kProfileHeader = "SQLBLOCK-PROFILE v1";

std::string serialize_profile(const Profile& p);
Profile parse_profile(std::string_view text);

}  // namespace sqlblock::profile
