#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <set>

#include "sqlblock/corpus.hpp"
#include "sqlblock/io.hpp"
#include "sqlblock/training.hpp"

using namespace sqlblock;
using namespace sqlblock::corpus;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("sqlblock_corpus_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Report self_replay(const std::vector<Scenario>& sc, const enforce::Policy& policy = {}) {
  php::DalSet dal = fixture_dal();
  return replay(sc, train(sc, dal).profile, dal, policy);
}

}  // namespace

TEST(Category, Names) {
  std::set<std::string> seen;
  for (Category c : kAllCategories) {
    EXPECT_EQ(category_from_name(category_name(c)), c);
    EXPECT_EQ(category_from_name(category_slug(c)), c);
    seen.insert(category_name(c));
  }
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_EQ(category_from_name("PIGGY-BACKED"), Category::PiggyBacked);
  EXPECT_EQ(std::string(category_name(Category::IllegalIncorrect)), "Illegal/Incorrect");
  EXPECT_FALSE(category_from_name("Timing"));
}

TEST(Category, OnlyIllegalIsUndefended) {
  for (Category c : kAllCategories) EXPECT_EQ(is_defended(c), c != Category::IllegalIncorrect);
}

TEST(Generate, UnknownCategoryThrows) {
  EXPECT_THROW(generate("Timing", default_contexts().front()), UnknownCategory);
  EXPECT_NO_THROW(generate("union", default_contexts().front()));
}

TEST(Generate, ExpectedReasons) {
  const Context ctx = default_contexts().front();
  EXPECT_EQ(generate(Category::Tautology, ctx).expect, enforce::Reason::CondNotSubset);
  EXPECT_EQ(generate(Category::Union, ctx).expect, enforce::Reason::TableNotSubset);
  EXPECT_EQ(generate(Category::PiggyBacked, ctx).expect, enforce::Reason::MultiStatementPartBlocked);
  EXPECT_EQ(generate(Category::IllegalIncorrect, ctx).expect, enforce::Reason::ParseFailPolicy);
}

TEST(Generate, EveryScenarioHasBothSides) {
  for (const auto& s : default_corpus()) {
    EXPECT_FALSE(s.benign.empty()) << s.name;
    EXPECT_FALSE(s.malicious.empty()) << s.name;
    for (const auto& q : s.benign) EXPECT_TRUE(tag::try_decode_tag(q)) << q;
    for (const auto& q : s.malicious) EXPECT_TRUE(tag::try_decode_tag(q)) << q;
  }
}

TEST(Generate, Deterministic) {
  auto a = default_corpus(), b = default_corpus();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(serialize_scenario(a[i]), serialize_scenario(b[i]));
  EXPECT_EQ(random_benign(5, 50, 7), random_benign(5, 50, 7));
  EXPECT_NE(random_benign(5, 50, 7), random_benign(6, 50, 7));
}

TEST(Scenario, RoundTrip) {
  for (const auto& s : default_corpus()) {
    Scenario back = parse_scenario(serialize_scenario(s));
    EXPECT_EQ(back.name, s.name);
    EXPECT_EQ(back.category, s.category);
    EXPECT_EQ(back.expect, s.expect);
    EXPECT_EQ(back.benign, s.benign);
    EXPECT_EQ(back.malicious, s.malicious);
  }
}

TEST(Scenario, FormatErrors) {
  EXPECT_THROW(parse_scenario("NAME: x\nCATEGORY: Timing\n"), ScenarioFormatError);
  EXPECT_THROW(parse_scenario("NAME: x\nWHATEVER: y\n"), ScenarioFormatError);
  EXPECT_THROW(parse_scenario("NAME: x\nCATEGORY: Union\nEXPECT: Nope\n"), ScenarioFormatError);
}

TEST(Corpus, WriteAndLoad) {
  TempDir t;
  auto sc = default_corpus();
  write_corpus(t.path, sc);
  auto back = load_corpus(t.path);
  ASSERT_EQ(back.size(), sc.size());
  std::set<std::string> a, b;
  for (const auto& s : sc) a.insert(serialize_scenario(s));
  for (const auto& s : back) b.insert(serialize_scenario(s));
  EXPECT_EQ(a, b);
  EXPECT_THROW(load_corpus(t.path / "missing"), IoError);
}

TEST(Replay, EmptyCorpusIsOk) {
  Report r = replay({}, profile::Profile{}, fixture_dal());
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.results.empty());
  EXPECT_NE(format_report(r).find("result: OK"), std::string::npos);
}

TEST(Replay, DefaultCorpus) {
  Report r = self_replay(default_corpus());
  EXPECT_TRUE(r.ok()) << format_report(r);
  for (const auto& s : r.results) {
    EXPECT_EQ(s.benign_blocked, 0u) << s.name;
    if (is_defended(s.category)) {
      EXPECT_EQ(s.malicious_blocked, s.malicious_total) << s.name;
      EXPECT_EQ(s.unexpected_reason, 0u) << s.name;
    }
  }
}

TEST(Replay, IllegalFollowsPolicy) {
  std::vector<Scenario> sc;
  for (const auto& c : default_contexts()) sc.push_back(generate(Category::IllegalIncorrect, c));
  Report blocked = self_replay(sc);
  Report allowed = self_replay(sc, {false, true});
  for (const auto& s : blocked.results) EXPECT_EQ(s.malicious_blocked, s.malicious_total);
  for (const auto& s : allowed.results) EXPECT_EQ(s.malicious_blocked, 0u);
  EXPECT_TRUE(allowed.ok());  // not counted against the defended categories
}

TEST(Replay, MissedAttackFailsTheReport) {
  Scenario s = generate(Category::Tautology, default_contexts().front());
  s.benign.insert(s.benign.end(), s.malicious.begin(), s.malicious.end());  // poisoned training
  Report r = self_replay({s});
  EXPECT_FALSE(r.ok());
  EXPECT_NE(format_report(r).find("result: FAIL"), std::string::npos);
}

TEST(Fixtures, DescriptorsAndVariants) {
  php::DalSet dal = fixture_dal();
  auto cases = fixture_cases();
  EXPECT_EQ(cases.size(), 11u);
  for (const auto& fc : cases) {
    std::vector<profile::TrainingRecord> rs;
    for (const auto& v : fc.variants) {
      for (const auto& q : v.benign) rs.push_back(profile::record_training(q));
    }
    auto prof = profile::build_profile(rs, dal).profile;
    const auto* set = prof.find(fc.function);
    ASSERT_TRUE(set) << fc.id;
    ASSERT_EQ(set->size(), 1u) << fc.id;
    EXPECT_EQ(profile::format_descriptor(*set->begin()), fc.descriptor) << fc.id;
    Report r = replay(fc.variants, prof, dal);
    EXPECT_TRUE(r.ok()) << fc.id << "\n" << format_report(r);
  }
}

TEST(RandomBenign, SpreadAndParseable) {
  auto qs = random_benign(1, 400, 24);
  EXPECT_EQ(qs.size(), 400u);
  std::set<std::string> fns;
  for (const auto& q : qs) {
    auto d = tag::decode_tag(q);
    fns.insert(tag::attribute(d.frames, fixture_dal()).identity);
    EXPECT_NO_THROW(profile::record_training(q)) << q;
  }
  EXPECT_EQ(fns.size(), 24u);
}
