// ALLOW/BLOCK decisions for tagged queries against a built profile.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sqlblock/dal.hpp"
#include "sqlblock/profile.hpp"

namespace sqlblock::enforce {

enum class Reason {
  None,
  NoProfileEntry,
  NoTagPolicy,
  ParseFailPolicy,
  OpMismatch,
  TableNotSubset,
  CondNotSubset,
  FuncNotSubset,
  MultiStatementPartBlocked,
};

const char* reason_name(Reason r);
std::optional<Reason> reason_from_name(std::string_view s);

struct Verdict {
  bool allow = false;
  Reason reason = Reason::None;
  std::optional<std::size_t> matched_descriptor;  // index within the function's set
  std::string identity;                           // attributed function, if any

  // `ALLOW` or `BLOCK <reason>`
  std::string line() const;
  bool operator==(const Verdict&) const = default;
};

// Result of checking the four components in order; `failed` is the first
// component that does not hold (Reason::None when all do).
struct MatchDetail {
  bool ok = false;
  Reason failed = Reason::None;
};

MatchDetail match_descriptor(const sql::QuerySignature& sig, const profile::QueryDescriptor& d);

struct Policy {
  bool allow_untagged = false;
  bool allow_parse_failure = false;
};

Verdict decide(std::string_view tagged_query, const profile::Profile& profile, const php::DalSet& dal,
               const Policy& policy = {});

// Immutable snapshot shared by concurrent callers.
struct EnforcementState {
  profile::Profile profile;
  php::DalSet dal;
  Policy policy;

  Verdict decide(std::string_view tagged_query) const { return enforce::decide(tagged_query, profile, dal, policy); }
};

using StatePtr = std::shared_ptr<const EnforcementState>;

}  // namespace sqlblock::enforce
