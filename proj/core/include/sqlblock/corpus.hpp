// Benign/malicious query scenarios for the eight injection categories, the
// bundled fixture cases, and batch replay against a profile.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/enforcer.hpp"
#include "sqlblock/tagging.hpp"
#include "sqlblock/training.hpp"

namespace sqlblock::corpus {

enum class Category {
  Tautology,
  IllegalIncorrect,
  Union,
  PiggyBacked,
  StoredProcedure,
  Inference,
  AlternateEncoding,
  SecondOrder,
};

inline constexpr std::array<Category, 8> kAllCategories{
    Category::Tautology,       Category::IllegalIncorrect, Category::Union,
    Category::PiggyBacked,     Category::StoredProcedure,  Category::Inference,
    Category::AlternateEncoding, Category::SecondOrder,
};

const char* category_name(Category c);  // display name, e.g. "Piggy-backed"
const char* category_slug(Category c);  // file-name form, e.g. "piggy-backed"
// Accepts either form, case-insensitively.
std::optional<Category> category_from_name(std::string_view s);

// Illegal/Incorrect probing is outside the model; its outcome is whatever
// the parse-failure policy says.
bool is_defended(Category c);

class UnknownCategory : public std::invalid_argument {
 public:
  explicit UnknownCategory(std::string_view name);
};

struct Context {
  std::string table;
  std::string function;
  std::string column;
  std::string cmp;                  // comparison used by the benign shape
  std::vector<std::string> values;  // SQL literals for benign instances
  std::string other_table;          // a table the function never touches
  std::string other_function;       // owns other_table
};

struct Scenario {
  std::string name;
  Category category = Category::Tautology;
  std::vector<std::string> benign;
  std::vector<std::string> malicious;
  enforce::Reason expect = enforce::Reason::None;
};

// Frames for a query issued by `function` through the bundled access layer.
tag::Frames frames_for(std::string_view function);
std::string tagged(std::string_view sql, std::string_view function);

// The access layer the bundled tags are written against.
php::DalSet fixture_dal();

Scenario generate(Category c, const Context& ctx);
Scenario generate(std::string_view category, const Context& ctx);  // throws UnknownCategory

std::vector<Context> default_contexts();
// Every category over every default context.
std::vector<Scenario> default_corpus();

// One vulnerable function per case; `descriptor` is the single descriptor
// its benign set must train to (format_descriptor form).
struct FixtureCase {
  std::string id;
  std::string function;
  std::string descriptor;
  std::vector<Scenario> variants;
};

std::vector<FixtureCase> fixture_cases();

// Benign queries spread over `functions` synthetic functions.
std::vector<std::string> random_benign(std::uint64_t seed, std::size_t count, std::size_t functions);

class ScenarioFormatError : public std::runtime_error {
 public:
  ScenarioFormatError(const std::string& where, int line, const std::string& what);
};

std::string serialize_scenario(const Scenario& s);
Scenario parse_scenario(std::string_view text, const std::string& where = "<scenario>");

// Reads every `*.scn` file in name order.
std::vector<Scenario> load_corpus(const std::filesystem::path& dir);
void write_corpus(const std::filesystem::path& dir, const std::vector<Scenario>& scenarios);

// Trains on the benign queries of every scenario.
profile::BuildReport train(const std::vector<Scenario>& scenarios, const php::DalSet& dal);

struct ScenarioResult {
  std::string name;
  Category category = Category::Tautology;
  enforce::Reason expect = enforce::Reason::None;
  std::size_t benign_total = 0;
  std::size_t benign_blocked = 0;
  std::size_t malicious_total = 0;
  std::size_t malicious_blocked = 0;
  std::size_t unexpected_reason = 0;  // blocked, but not for `expect`
  std::vector<enforce::Reason> reasons;

  bool ok() const;
};

struct Report {
  std::vector<ScenarioResult> results;
  enforce::Policy policy;

  // No benign block anywhere; every defended malicious query blocked for the
  // expected reason.
  bool ok() const;
};

Report replay(const std::vector<Scenario>& scenarios, const profile::Profile& profile, const php::DalSet& dal,
              const enforce::Policy& policy = {});

std::string format_report(const Report& r);

}  // namespace sqlblock::corpus
