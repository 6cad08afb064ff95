#include "sqlblock/corpus.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "sqlblock/io.hpp"
#include "sqlblock/tagging.hpp"

namespace sqlblock::corpus {

using enforce::Reason;

namespace {

struct CategoryInfo {
  Category c;
  const char* name;
  const char* slug;
};

constexpr CategoryInfo kInfo[] = {
    {Category::Tautology, "Tautology", "tautology"},
    {Category::IllegalIncorrect, "Illegal/Incorrect", "illegal-incorrect"},
    {Category::Union, "Union", "union"},
    {Category::PiggyBacked, "Piggy-backed", "piggy-backed"},
    {Category::StoredProcedure, "Stored procedure", "stored-procedure"},
    {Category::Inference, "Inference", "inference"},
    {Category::AlternateEncoding, "Alternate encoding", "alternate-encoding"},
    {Category::SecondOrder, "Second-order", "second-order"},
};

const CategoryInfo& info(Category c) { return kInfo[static_cast<int>(c)]; }

}  // namespace

const char* category_name(Category c) { return info(c).name; }
const char* category_slug(Category c) { return info(c).slug; }

std::optional<Category> category_from_name(std::string_view s) {
  s = text::trim(s);
  for (const auto& i : kInfo) {
    if (text::iequals(s, i.name) || text::iequals(s, i.slug)) return i.c;
  }
  return std::nullopt;
}

bool is_defended(Category c) { return c != Category::IllegalIncorrect; }

UnknownCategory::UnknownCategory(std::string_view name)
    : std::invalid_argument("unknown injection category '" + std::string(name) + "'") {}

tag::Frames frames_for(std::string_view function) {
  return {"mysqli::multi_query", "DatabaseConnectionmysqli::multi_execute", "executeQuery", std::string(function)};
}

std::string tagged(std::string_view sql, std::string_view function) {
  return tag::encode_tag(sql, frames_for(function));
}

php::DalSet fixture_dal() {
  php::DalSet d;
  d.seeds = {"PDO", "mysqli"};
  d.subclasses = {"PDO", "mysqli", "DatabaseConnectionmysqli"};
  d.procedures = {"executeQuery"};
  return d;
}

// ---------------------------------------------------------------------------
// Generic scenarios: one benign shape per context, one attack per category.

namespace {

std::string base_query(const Context& ctx, std::string_view value) {
  return "SELECT * FROM " + ctx.table + " WHERE " + ctx.column + " " + ctx.cmp + " " + std::string(value);
}

std::vector<std::string> attacks(Category c, const Context& ctx) {
  const std::string v = ctx.values.empty() ? "0" : ctx.values.front();
  const std::string pre = "SELECT * FROM " + ctx.table + " WHERE " + ctx.column + " " + ctx.cmp + " ";
  switch (c) {
    case Category::Tautology:
      return {base_query(ctx, v) + " OR 1=1", base_query(ctx, v) + " OR 'a'='a'"};
    case Category::IllegalIncorrect:
      return {base_query(ctx, v) + "'", base_query(ctx, v) + " AND"};
    case Category::Union:
      return {base_query(ctx, v) + " UNION SELECT name, pass FROM " + ctx.other_table,
              base_query(ctx, v) + " UNION ALL SELECT @@version, 1"};
    case Category::PiggyBacked:
      return {base_query(ctx, v) + "; DROP TABLE " + ctx.other_table,
              base_query(ctx, v) + "; UPDATE " + ctx.table + " SET " + ctx.column + " = 0"};
    case Category::StoredProcedure:
      return {pre + "sys_exec('id')", pre + "xp_cmdshell('dir')"};
    case Category::Inference:
      return {pre + "IF(ASCII(SUBSTRING(USER(), 1, 1)) > 100, SLEEP(2), 0)", pre + "BENCHMARK(2000000, MD5(1))"};
    case Category::AlternateEncoding:
      return {pre + "CHAR(49, 32, 79, 82, 32, 49)", pre + "UNHEX('31204f522031')"};
    case Category::SecondOrder:
      return {"SELECT name, pass FROM " + ctx.other_table + " WHERE id = 1"};
  }
  return {};
}

Reason predicted(Category c) {
  switch (c) {
    case Category::Tautology: return Reason::CondNotSubset;
    case Category::IllegalIncorrect: return Reason::ParseFailPolicy;
    case Category::Union: return Reason::TableNotSubset;
    case Category::PiggyBacked: return Reason::MultiStatementPartBlocked;
    case Category::StoredProcedure:
    case Category::Inference:
    case Category::AlternateEncoding: return Reason::FuncNotSubset;
    case Category::SecondOrder: return Reason::TableNotSubset;
  }
  return Reason::None;
}

}  // namespace

Scenario generate(Category c, const Context& ctx) {
  Scenario s;
  s.name = std::string(category_slug(c)) + "-" + ctx.table;
  s.category = c;
  s.expect = predicted(c);
  for (const auto& v : ctx.values) s.benign.push_back(tagged(base_query(ctx, v), ctx.function));
  // The payload was stored through the other function's legitimate query and
  // resurfaces in `ctx.function`, which has never read that table.
  if (c == Category::SecondOrder) {
    s.benign.push_back(tagged("SELECT name, pass FROM " + ctx.other_table + " WHERE id = 7", ctx.other_function));
  }
  for (const auto& q : attacks(c, ctx)) s.malicious.push_back(tagged(q, ctx.function));
  return s;
}

Scenario generate(std::string_view category, const Context& ctx) {
  auto c = category_from_name(category);
  if (!c) throw UnknownCategory(category);
  return generate(*c, ctx);
}

std::vector<Context> default_contexts() {
  return {
      {"public_info", "get_public_info", "id", ">", {"0", "10", "25"}, "users", "show_login"},
      {"wp_posts", "get_post", "post_name", "=", {"'hello-world'", "'about'", "'contact'"}, "wp_users",
       "wp_authenticate"},
      {"jos_content", "article_view", "catid", "=", {"3", "8", "12"}, "jos_session", "session_gc"},
  };
}

std::vector<Scenario> default_corpus() {
  std::vector<Scenario> out;
  for (const auto& ctx : default_contexts()) {
    for (Category c : kAllCategories) out.push_back(generate(c, ctx));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixture cases. Each benign set trains to exactly one descriptor; each
// variant is an exploit shape the descriptor must reject.

namespace {

struct VariantSpec {
  Category c;
  std::string sql;
  Reason expect;
};

FixtureCase make_case(std::string id, std::string fn, std::string descriptor, std::vector<std::string> benign,
                      std::vector<VariantSpec> variants, std::vector<std::string> extra_benign = {}) {
  FixtureCase fc;
  fc.id = std::move(id);
  fc.function = std::move(fn);
  fc.descriptor = std::move(descriptor);
  std::vector<std::string> ben;
  for (const auto& q : benign) ben.push_back(tagged(q, fc.function));
  ben.insert(ben.end(), extra_benign.begin(), extra_benign.end());
  for (auto& v : variants) {
    Scenario s;
    s.name = fc.id + "-" + category_slug(v.c);
    s.category = v.c;
    s.expect = v.expect;
    s.benign = ben;
    s.malicious.push_back(tagged(v.sql, fc.function));
    fc.variants.push_back(std::move(s));
  }
  return fc;
}

}  // namespace

std::vector<FixtureCase> fixture_cases() {
  using C = Category;
  using R = Reason;
  std::vector<FixtureCase> out;

  out.push_back(make_case(
      "fx01", "em_modal_update", "2|wp_em_modals|none|=:FIELD:LITERAL;IN:FIELD:LITERAL",
      {"UPDATE wp_em_modals SET active = 0 WHERE id IN (3, 4)", "UPDATE wp_em_modals SET active = 1 WHERE id IN (9)"},
      {{C::Tautology, "UPDATE wp_em_modals SET active = 0 WHERE id IN (3) OR 1=1", R::CondNotSubset},
       {C::Inference, "UPDATE wp_em_modals SET active = 0 WHERE id IN (SLEEP(5))", R::FuncNotSubset},
       {C::AlternateEncoding, "UPDATE wp_em_modals SET active = 0 WHERE id IN (CHAR(51))", R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx02", "polls_vote", "2|wp_polls|none|=:FIELD:LITERAL",
      {"UPDATE wp_polls SET votes = 5 WHERE id = 2", "UPDATE wp_polls SET votes = 6 WHERE id = 3"},
      {{C::Tautology, "UPDATE wp_polls SET votes = 5 WHERE id = 2 OR 1=1", R::CondNotSubset},
       {C::Inference, "UPDATE wp_polls SET votes = 5 WHERE id = SLEEP(3)", R::FuncNotSubset},
       {C::AlternateEncoding, "UPDATE wp_polls SET votes = 5 WHERE id = UNHEX('32')", R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx03", "formmaker_submits", "0|wp_formmaker_submits|and|=:FIELD:LITERAL",
      {"SELECT * FROM wp_formmaker_submits WHERE form_id = 1 AND group_id = 2",
       "SELECT * FROM wp_formmaker_submits WHERE form_id = 4 AND group_id = 11"},
      {{C::Inference, "SELECT * FROM wp_formmaker_submits WHERE form_id = 1 AND group_id = IF(1=1, SLEEP(2), 0)",
        R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx04", "autosuggest_posts", "0|wp_posts|and|=:FIELD:LITERAL",
      {"SELECT * FROM wp_posts WHERE post_title = 'a' AND post_status = 'publish'",
       "SELECT * FROM wp_posts WHERE post_title = 'b' AND post_status = 'draft'"},
      {{C::Tautology, "SELECT * FROM wp_posts WHERE post_title = 'a' AND post_status = 'publish' OR 1=1",
        R::CondNotSubset},
       {C::Inference, "SELECT * FROM wp_posts WHERE post_title = 'a' AND post_status = SLEEP(2)",
        R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx05", "user_login_authenticate", "0|users|and|=:FIELD:LITERAL",
      {"SELECT * FROM users WHERE name = 'alice' AND status = 1",
       "SELECT * FROM users WHERE name = 'bob' AND status = 1"},
      {{C::Tautology, "SELECT * FROM users WHERE name = 'x' OR 1=1 AND status = 1", R::CondNotSubset},
       {C::Union, "SELECT * FROM users WHERE name = 'x' AND status = 1 UNION SELECT * FROM sessions",
        R::TableNotSubset},
       {C::PiggyBacked, "SELECT * FROM users WHERE name = 'x' AND status = 1; INSERT INTO role VALUES (1, 'admin')",
        R::MultiStatementPartBlocked},
       {C::StoredProcedure, "SELECT * FROM users WHERE name = sys_exec('id') AND status = 1", R::FuncNotSubset},
       {C::Inference, "SELECT * FROM users WHERE name = 'x' AND status = SLEEP(4)", R::FuncNotSubset},
       {C::AlternateEncoding, "SELECT * FROM users WHERE name = CHAR(97, 100) AND status = 1", R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx06", "fields_list_model", "0|fields,languages,users|both|=:FIELD:FIELD;=:FIELD:LITERAL;IN:FIELD:LITERAL",
      {"SELECT u.name FROM users u JOIN languages l ON l.id = u.lang_id JOIN fields f ON f.user_id = u.id "
       "WHERE u.id IN (1, 2) AND (l.code = 'en' OR f.name = 'x')",
       "SELECT u.name FROM users u JOIN languages l ON l.id = u.lang_id JOIN fields f ON f.user_id = u.id "
       "WHERE u.id IN (7) AND (l.code = 'de' OR f.name = 'y')"},
      {{C::Union,
        "SELECT u.name FROM users u JOIN languages l ON l.id = u.lang_id JOIN fields f ON f.user_id = u.id "
        "WHERE u.id IN (1) AND (l.code = 'en' OR f.name = 'x') UNION SELECT password FROM session",
        R::TableNotSubset},
       {C::Inference,
        "SELECT u.name FROM users u JOIN languages l ON l.id = u.lang_id JOIN fields f ON f.user_id = u.id "
        "WHERE u.id IN (1, SLEEP(2)) AND (l.code = 'en' OR f.name = 'x')",
        R::FuncNotSubset},
       {C::AlternateEncoding,
        "SELECT u.name FROM users u JOIN languages l ON l.id = u.lang_id JOIN fields f ON f.user_id = u.id "
        "WHERE u.id IN (1) AND (l.code = CHAR(101, 110) OR f.name = 'x')",
        R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx07", "jobs_fieldsordering", "0|js_jobs_fieldsordering|none|=:FIELD:LITERAL",
      {"SELECT * FROM js_jobs_fieldsordering WHERE fieldfor = 3",
       "SELECT * FROM js_jobs_fieldsordering WHERE fieldfor = 2"},
      {{C::Inference, "SELECT * FROM js_jobs_fieldsordering WHERE fieldfor = BENCHMARK(1000000, MD5(1))",
        R::FuncNotSubset}}));

  out.push_back(make_case(
      "fx08", "photogallery_item", "0|jephotogallery|none|=:FIELD:LITERAL",
      {"SELECT * FROM jephotogallery WHERE id = 1", "SELECT * FROM jephotogallery WHERE id = 42"},
      {{C::Union, "SELECT * FROM jephotogallery WHERE id = 1 UNION SELECT * FROM jos_users", R::TableNotSubset},
       {C::Inference, "SELECT * FROM jephotogallery WHERE id = 1 AND SLEEP(3)", R::CondNotSubset}}));

  out.push_back(make_case(
      "fx09", "quickcontact_captcha", "0|jquickcontanct_captach|none|=:FIELD:LITERAL",
      {"SELECT * FROM jquickcontanct_captach WHERE id = 5", "SELECT * FROM jquickcontanct_captach WHERE id = 6"},
      {{C::Inference, "SELECT * FROM jquickcontanct_captach WHERE id = 5 AND SLEEP(3)", R::CondNotSubset}}));

  out.push_back(make_case(
      "fx10", "template_styles_admin", "0|template_styles|and|=:FIELD:LITERAL",
      {"SELECT * FROM template_styles WHERE client_id = 0 AND home = 1",
       "SELECT * FROM template_styles WHERE client_id = 1 AND home = 0"},
      {{C::SecondOrder, "SELECT * FROM users WHERE username = 'admin' AND password = 'x'", R::TableNotSubset}},
      {tagged("SELECT * FROM users WHERE username = 'alice' AND password = 'h'", "user_login")}));

  out.push_back(make_case(
      "fx11", "product_frontend_actions", "0|catalog_product_frontend_action|and|<=:FIELD:LITERAL;>=:FIELD:LITERAL",
      {"SELECT * FROM catalog_product_frontend_action WHERE added_at >= 100 AND added_at <= 200",
       "SELECT * FROM catalog_product_frontend_action WHERE added_at >= 5 AND added_at <= 9"},
      {{C::Inference,
        "SELECT * FROM catalog_product_frontend_action WHERE added_at >= 100 AND added_at <= IF(1=1, SLEEP(1), 200)",
        R::FuncNotSubset},
       {C::AlternateEncoding,
        "SELECT * FROM catalog_product_frontend_action WHERE added_at >= 100 AND added_at <= CONV('c8', 16, 10)",
        R::FuncNotSubset}}));

  return out;
}

// ---------------------------------------------------------------------------
// Random benign traffic.

namespace {

constexpr const char* kShapes[] = {
    "SELECT * FROM {T} WHERE {c} = {i}",
    "SELECT {c}, {d} FROM {T} WHERE {c} > {i} AND {d} < {i}",
    "SELECT COUNT(*) FROM {T} WHERE {c} IN ({l})",
    "SELECT * FROM {T} WHERE {c} = {s} OR {d} LIKE {s}",
    "UPDATE {T} SET {c} = {i} WHERE {d} = {i}",
    "INSERT INTO {T} ({c}, {d}) VALUES ({i}, {s})",
    "DELETE FROM {T} WHERE {c} BETWEEN {i} AND {i}",
    "SELECT a.{c} FROM {T} a JOIN {U} b ON a.{c} = b.{d} WHERE b.{d} = {i}",
    "SELECT * FROM {T} WHERE LOWER({c}) = {s} ORDER BY {d} DESC LIMIT {i}",
    "SELECT * FROM {T} WHERE {c} = {i} AND ({d} = {s} OR {d} IS NULL)",
    "SELECT * FROM {T} WHERE {c} IN (SELECT {d} FROM {U} WHERE {c} = {i})",
    "INSERT INTO {T} ({c}) VALUES ({i}) ON DUPLICATE KEY UPDATE {c} = {c} + 1",
    "SELECT MAX({c}) FROM {T} GROUP BY {d} HAVING COUNT(*) > {i}",
    "UPDATE {T} SET {c} = {c} + {i} WHERE {d} IN ({l})",
    "SELECT * FROM {T} WHERE {c} = -{i} AND {d} <> {s}",
    "SELECT {c} FROM {T} WHERE {d} NOT IN ({l}) LIMIT {i}, {i}",
    "REPLACE INTO {T} ({c}, {d}) VALUES ({s}, {i})",
    "SELECT * FROM {T} WHERE {c} = {i}; SELECT * FROM {U} WHERE {d} = {s}",
};

constexpr const char* kTables[] = {"accounts", "orders", "items", "sessions", "comments", "tags", "media", "audit"};
constexpr const char* kColumns[] = {"id", "owner_id", "status", "title", "created", "score", "slug", "kind"};

struct Binding {
  std::string shape;
  std::string t, u, c, d;
};

std::string random_string(std::mt19937_64& rng) {
  static constexpr std::string_view kAlpha = "abcdefghijklmnopqrstuvwxyz0123456789";
  static constexpr const char* kOdd[] = {"''", " # x", "@", "--", "\\\\", "%", "\xc3\xa9"};
  std::string s = "'";
  std::size_t n = 1 + rng() % 10;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng() % 8 == 0) s += kOdd[rng() % std::size(kOdd)];
    else s += kAlpha[rng() % kAlpha.size()];
  }
  return s + "'";
}

std::string expand(const Binding& b, std::mt19937_64& rng) {
  std::string out;
  std::string_view s = b.shape;
  while (!s.empty()) {
    if (s.front() != '{') {
      out.push_back(s.front());
      s.remove_prefix(1);
      continue;
    }
    std::size_t close = s.find('}');
    std::string_view key = s.substr(1, close - 1);
    s.remove_prefix(close + 1);
    if (key == "T") out += b.t;
    else if (key == "U") out += b.u;
    else if (key == "c") out += b.c;
    else if (key == "d") out += b.d;
    else if (key == "i") out += std::to_string(rng() % 1000);
    else if (key == "s") out += random_string(rng);
    else if (key == "l") {
      std::size_t n = 1 + rng() % 5;
      for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ", ";
        out += std::to_string(rng() % 100);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> random_benign(std::uint64_t seed, std::size_t count, std::size_t functions) {
  std::mt19937_64 rng(seed);
  if (functions == 0) functions = 1;
  std::vector<std::vector<Binding>> fns(functions);
  for (auto& f : fns) {
    std::size_t shapes = 1 + rng() % 3;
    for (std::size_t k = 0; k < shapes; ++k) {
      Binding b;
      b.shape = kShapes[rng() % std::size(kShapes)];
      b.t = kTables[rng() % std::size(kTables)];
      b.u = kTables[rng() % std::size(kTables)];
      b.c = kColumns[rng() % std::size(kColumns)];
      b.d = kColumns[rng() % std::size(kColumns)];
      f.push_back(std::move(b));
    }
  }
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Round-robin first so every function is seen at least once.
    std::size_t fi = i < functions ? i : rng() % functions;
    const auto& f = fns[fi];
    const Binding& b = f[rng() % f.size()];
    char name[32];
    std::snprintf(name, sizeof name, "fn_%03zu", fi);
    tag::Frames frames = frames_for(name);
    frames.push_back("route_" + std::to_string(rng() % 4));
    out.push_back(tag::encode_tag(expand(b, rng), frames));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files.

ScenarioFormatError::ScenarioFormatError(const std::string& where, int line, const std::string& what)
    : std::runtime_error(where + ":" + std::to_string(line) + ": " + what) {}

std::string serialize_scenario(const Scenario& s) {
  std::string out = "NAME: " + s.name + "\nCATEGORY: " + category_name(s.category) +
                    "\nEXPECT: " + enforce::reason_name(s.expect) + "\nBENIGN:\n";
  for (const auto& q : s.benign) out += q + "\n";
  out += "MALICIOUS:\n";
  for (const auto& q : s.malicious) out += q + "\n";
  return out;
}

Scenario parse_scenario(std::string_view in, const std::string& where) {
  Scenario s;
  enum { Header, Benign, Malicious } section = Header;
  bool have_name = false, have_cat = false, have_expect = false;
  int ln = 0;
  for (std::string_view line : text::split(in, '\n')) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    if (line == "BENIGN:") {
      section = Benign;
      continue;
    }
    if (line == "MALICIOUS:") {
      section = Malicious;
      continue;
    }
    if (section == Benign) {
      s.benign.emplace_back(line);
      continue;
    }
    if (section == Malicious) {
      s.malicious.emplace_back(line);
      continue;
    }
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) throw ScenarioFormatError(where, ln, "expected KEY: value");
    std::string_view key = line.substr(0, colon);
    std::string_view val = text::trim(line.substr(colon + 1));
    if (key == "NAME") {
      s.name = std::string(val);
      have_name = true;
    } else if (key == "CATEGORY") {
      auto c = category_from_name(val);
      if (!c) throw ScenarioFormatError(where, ln, UnknownCategory(val).what());
      s.category = *c;
      have_cat = true;
    } else if (key == "EXPECT") {
      auto r = enforce::reason_from_name(val);
      if (!r) throw ScenarioFormatError(where, ln, "unknown reason '" + std::string(val) + "'");
      s.expect = *r;
      have_expect = true;
    } else {
      throw ScenarioFormatError(where, ln, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_name || !have_cat || !have_expect) throw ScenarioFormatError(where, ln, "missing NAME, CATEGORY or EXPECT");
  return s;
}

std::vector<Scenario> load_corpus(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError(dir, "not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".scn") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(parse_scenario(read_file(f), f.filename().string()));
  return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<Scenario>& scenarios) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, ec.message());
  for (const auto& s : scenarios) write_file_atomic(dir / (s.name + ".scn"), serialize_scenario(s));
}

// ---------------------------------------------------------------------------
// Replay.

profile::BuildReport train(const std::vector<Scenario>& scenarios, const php::DalSet& dal) {
  std::vector<profile::TrainingRecord> recs;
  std::vector<std::string> errors;
  for (const auto& s : scenarios) {
    for (const auto& q : s.benign) {
      try {
        recs.push_back(profile::record_training(q));
      } catch (const std::exception& e) {
        errors.push_back(s.name + ": " + e.what());
      }
    }
  }
  profile::BuildReport r = profile::build_profile(recs, dal);
  r.errors.insert(r.errors.begin(), errors.begin(), errors.end());
  return r;
}

bool ScenarioResult::ok() const {
  if (benign_blocked) return false;
  if (!is_defended(category)) return true;
  return malicious_blocked == malicious_total && unexpected_reason == 0;
}

bool Report::ok() const {
  return std::all_of(results.begin(), results.end(), [](const ScenarioResult& r) { return r.ok(); });
}

Report replay(const std::vector<Scenario>& scenarios, const profile::Profile& profile, const php::DalSet& dal,
              const enforce::Policy& policy) {
  Report rep;
  rep.policy = policy;
  for (const auto& s : scenarios) {
    ScenarioResult r;
    r.name = s.name;
    r.category = s.category;
    r.expect = s.expect;
    r.benign_total = s.benign.size();
    r.malicious_total = s.malicious.size();
    for (const auto& q : s.benign) {
      if (!enforce::decide(q, profile, dal, policy).allow) ++r.benign_blocked;
    }
    for (const auto& q : s.malicious) {
      enforce::Verdict v = enforce::decide(q, profile, dal, policy);
      r.reasons.push_back(v.reason);
      if (v.allow) continue;
      ++r.malicious_blocked;
      if (v.reason != s.expect) ++r.unexpected_reason;
    }
    rep.results.push_back(std::move(r));
  }
  return rep;
}

namespace {

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s + " ";
}

std::string frac(std::size_t a, std::size_t b) { return std::to_string(a) + "/" + std::to_string(b); }

}  // namespace

std::string format_report(const Report& rep) {
  std::ostringstream os;
  os << pad("scenario", 36) << pad("category", 20) << pad("benign_ok", 10) << pad("blocked", 8) << "reasons\n";
  struct Tally {
    std::size_t scenarios = 0, benign = 0, benign_blocked = 0, mal = 0, mal_blocked = 0, unexpected = 0;
  };
  std::map<int, Tally> by_cat;
  for (const auto& r : rep.results) {
    std::string reasons;
    for (Reason x : r.reasons) {
      if (!reasons.empty()) reasons += ',';
      reasons += x == Reason::None ? "ALLOW" : enforce::reason_name(x);
    }
    os << pad(r.name, 36) << pad(category_name(r.category), 20)
       << pad(frac(r.benign_total - r.benign_blocked, r.benign_total), 10)
       << pad(frac(r.malicious_blocked, r.malicious_total), 8) << (reasons.empty() ? "-" : reasons)
       << (r.ok() ? "" : "  FAIL") << "\n";
    Tally& t = by_cat[static_cast<int>(r.category)];
    ++t.scenarios;
    t.benign += r.benign_total;
    t.benign_blocked += r.benign_blocked;
    t.mal += r.malicious_total;
    t.mal_blocked += r.malicious_blocked;
    t.unexpected += r.unexpected_reason;
  }
  os << "\n" << pad("category", 20) << pad("scenarios", 10) << pad("benign_blocked", 15)
     << pad("malicious_blocked", 18) << "note\n";
  Tally defended;
  for (const auto& [ci, t] : by_cat) {
    auto c = static_cast<Category>(ci);
    std::string note;
    if (!is_defended(c)) {
      note = std::string("not defended; parsefail=") + (rep.policy.allow_parse_failure ? "allow" : "block");
    } else {
      defended.benign += t.benign;
      defended.benign_blocked += t.benign_blocked;
      defended.mal += t.mal;
      defended.mal_blocked += t.mal_blocked;
      defended.unexpected += t.unexpected;
      if (t.unexpected) note = std::to_string(t.unexpected) + " unexpected reason";
    }
    os << pad(category_name(c), 20) << pad(std::to_string(t.scenarios), 10)
       << pad(frac(t.benign_blocked, t.benign), 15) << pad(frac(t.mal_blocked, t.mal), 18) << (note.empty() ? "-" : note)
       << "\n";
  }
  std::size_t benign_all = 0, benign_blocked_all = 0;
  for (const auto& [ci, t] : by_cat) {
    benign_all += t.benign;
    benign_blocked_all += t.benign_blocked;
  }
  os << "\ndefended malicious blocked: " << frac(defended.mal_blocked, defended.mal)
     << "\nbenign blocked: " << frac(benign_blocked_all, benign_all) << "\nresult: " << (rep.ok() ? "OK" : "FAIL")
     << "\n";
  return os.str();
}

}  // namespace sqlblock::corpus
