#include "sqlblock/enforcer.hpp"

#include <algorithm>

#include "sqlblock/sql_parser.hpp"
#include "sqlblock/tagging.hpp"

namespace sqlblock::enforce {

const char* reason_name(Reason r) {
  switch (r) {
    case Reason::None: return "None";
    case Reason::NoProfileEntry: return "NoProfileEntry";
    case Reason::NoTagPolicy: return "NoTagPolicy";
    case Reason::ParseFailPolicy: return "ParseFailPolicy";
    case Reason::OpMismatch: return "OpMismatch";
    case Reason::TableNotSubset: return "TableNotSubset";
    case Reason::CondNotSubset: return "CondNotSubset";
    case Reason::FuncNotSubset: return "FuncNotSubset";
    case Reason::MultiStatementPartBlocked: return "MultiStatementPartBlocked";
  }
  return "None";
}

std::optional<Reason> reason_from_name(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Reason::MultiStatementPartBlocked); ++i) {
    auto r = static_cast<Reason>(i);
    if (s == reason_name(r)) return r;
  }
  return std::nullopt;
}

std::string Verdict::line() const { return allow ? "ALLOW" : std::string("BLOCK ") + reason_name(reason); }

MatchDetail match_descriptor(const sql::QuerySignature& sig, const profile::QueryDescriptor& d) {
  if (sig.op != d.op) return {false, Reason::OpMismatch};
  if (!std::includes(d.tables.begin(), d.tables.end(), sig.tables.begin(), sig.tables.end())) {
    return {false, Reason::TableNotSubset};
  }
  if (!sql::cond_subset(sig.logic, d.cond)) return {false, Reason::CondNotSubset};
  for (const auto& f : sig.funcs) {
    if (!d.funcs.count(f.key())) return {false, Reason::FuncNotSubset};
  }
  return {true, Reason::None};
}

namespace {

Verdict block(Reason r, std::string identity = {}) {
  Verdict v;
  v.reason = r;
  v.identity = std::move(identity);
  return v;
}

// Reasons in component order; a later first failure means a closer miss.
int depth(Reason r) {
  switch (r) {
    case Reason::OpMismatch: return 0;
    case Reason::TableNotSubset: return 1;
    case Reason::CondNotSubset: return 2;
    case Reason::FuncNotSubset: return 3;
    default: return -1;
  }
}

struct StatementResult {
  std::optional<std::size_t> matched;
  Reason reason = Reason::None;
};

StatementResult check(const sql::QuerySignature& sig, const profile::DescriptorSet& set) {
  StatementResult r;
  int best = -1;
  std::size_t i = 0;
  for (const auto& d : set) {
    MatchDetail m = match_descriptor(sig, d);
    if (m.ok) {
      r.matched = i;
      r.reason = Reason::None;
      return r;
    }
    if (depth(m.failed) > best) {
      best = depth(m.failed);
      r.reason = m.failed;
    }
    ++i;
  }
  return r;
}

}  // namespace

Verdict decide(std::string_view tagged_query, const profile::Profile& profile, const php::DalSet& dal,
               const Policy& policy) {
  std::optional<tag::Decoded> tagd = tag::try_decode_tag(tagged_query);
  if (!tagd) {
    if (policy.allow_untagged) return Verdict{true, Reason::None, std::nullopt, {}};
    return block(Reason::NoTagPolicy);
  }
  std::string who = tag::attribute(tagd->frames, dal).identity;

  const profile::DescriptorSet* set = profile.find(who);
  if (!set || set->empty()) return block(Reason::NoProfileEntry, std::move(who));

  std::vector<sql::SqlStatement> stmts;
  try {
    stmts = sql::parse_statements(tagd->sql);
  } catch (const sql::SqlError&) {
    stmts.clear();
  }
  if (stmts.empty()) {
    if (policy.allow_parse_failure) return Verdict{true, Reason::None, std::nullopt, std::move(who)};
    return block(Reason::ParseFailPolicy, std::move(who));
  }

  Verdict v;
  v.identity = std::move(who);
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    StatementResult r = check(sql::extract_signature(stmts[i]), *set);
    if (!r.matched) {
      v.reason = stmts.size() > 1 ? Reason::MultiStatementPartBlocked : r.reason;
      return v;
    }
    if (i == 0) v.matched_descriptor = r.matched;
  }
  v.allow = true;
  return v;
}

}  // namespace sqlblock::enforce
