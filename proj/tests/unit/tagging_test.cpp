#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sqlblock/corpus.hpp"
#include "sqlblock/tagging.hpp"

using namespace sqlblock;
using namespace sqlblock::tag;

namespace {

const std::string kPublicInfoQuery = "SELECT * FROM public_info where id > 0";
const Frames kPublicInfoFrames{"mysqli::multi_query", "DatabaseConnectionmysqli::multi_execute", "executeQuery",
                        "get_public_info"};
const std::string kPublicInfoLine =
    "SELECT * FROM public_info where id > 0 # "
    "mysqli::multi_query@DatabaseConnectionmysqli::multi_execute@executeQuery@get_public_info";

}  // namespace

TEST(Tag, EncodePublicInfo) { EXPECT_EQ(encode_tag(kPublicInfoQuery, kPublicInfoFrames), kPublicInfoLine); }

TEST(Tag, EncodeSingleFrame) { EXPECT_EQ(encode_tag("SELECT 1", {"main"}), "SELECT 1 # main"); }

TEST(Tag, InvalidFrames) {
  EXPECT_THROW(encode_tag("SELECT 1", {"a@b"}), InvalidFrame);
  EXPECT_THROW(encode_tag("SELECT 1", {"a#b"}), InvalidFrame);
  EXPECT_THROW(encode_tag("SELECT 1", {"a\nb"}), InvalidFrame);
  EXPECT_THROW(encode_tag("SELECT 1", {""}), InvalidFrame);
  EXPECT_THROW(encode_tag("SELECT 1", {}), TagError);
}

TEST(Tag, DecodePublicInfo) {
  Decoded d = decode_tag(kPublicInfoLine);
  EXPECT_EQ(d.sql, kPublicInfoQuery);
  EXPECT_EQ(d.frames, kPublicInfoFrames);
}

TEST(Tag, HashInsideLiteral) {
  Decoded d = decode_tag("SELECT '# x' # main");
  EXPECT_EQ(d.sql, "SELECT '# x'");
  EXPECT_EQ(d.frames, Frames{"main"});
  Decoded e = decode_tag("SELECT 'a # b' FROM t # f@g");
  EXPECT_EQ(e.sql, "SELECT 'a # b' FROM t");
  EXPECT_EQ(e.frames, (Frames{"f", "g"}));
}

TEST(Tag, Missing) {
  EXPECT_THROW(decode_tag("SELECT 1"), MissingTag);
  EXPECT_THROW(decode_tag("SELECT '# main'"), MissingTag);
  EXPECT_THROW(decode_tag("SELECT 1 /* # main */"), MissingTag);
  EXPECT_FALSE(try_decode_tag("SELECT 1"));
}

TEST(Tag, TrailingNewlineTolerated) {
  Decoded d = decode_tag("SELECT 1 # main\n");
  EXPECT_EQ(d.frames, Frames{"main"});
}

TEST(Tag, InjectedCommentDoesNotHideTheTag) {
  Decoded d = decode_tag("SELECT * FROM t WHERE a = 1 -- ' # f");
  EXPECT_EQ(d.frames, Frames{"f"});
}

TEST(Tag, RoundTripWithAwkwardLiterals) {
  std::mt19937_64 rng(3);
  const char* bits[] = {"'# x'", "'a @ b'", "\" # \"", "`#col`", "'it''s # ok'", "'\\' # '", "1", "x", "/* # */"};
  const char* names[] = {"main", "A::b", "f_1", "Ns\\Cls->m", "x.php"};
  for (int i = 0; i < 2000; ++i) {
    std::string sql = "SELECT";
    std::size_t n = 1 + rng() % 4;
    for (std::size_t k = 0; k < n; ++k) sql += std::string(k ? ", " : " ") + bits[rng() % std::size(bits)];
    Frames fr;
    std::size_t m = 1 + rng() % 4;
    for (std::size_t k = 0; k < m; ++k) fr.push_back(names[rng() % std::size(names)]);
    Decoded d = decode_tag(encode_tag(sql, fr));
    ASSERT_EQ(d.sql, sql);
    ASSERT_EQ(d.frames, fr);
    // the delimiter chosen is where the reference scanner sees the last comment
    auto starts = oracle::comment_starts(encode_tag(sql, fr));
    ASSERT_FALSE(starts.empty());
    ASSERT_EQ(starts.back(), sql.size() + 1);
  }
}

TEST(Attribute, PublicInfo) {
  php::DalSet dal = corpus::fixture_dal();
  Attribution a = attribute(kPublicInfoFrames, dal);
  EXPECT_EQ(a.identity, "get_public_info");
  EXPECT_FALSE(a.all_in_dal);
}

TEST(Attribute, NothingToSkip) {
  Attribution a = attribute({"main"}, php::DalSet{});
  EXPECT_EQ(a.identity, "main");
  EXPECT_FALSE(a.all_in_dal);
}

TEST(Attribute, SkipsProcedures) {
  php::DalSet dal;
  dal.seeds = dal.subclasses = {"mysqli"};
  dal.procedures = {"helper"};
  EXPECT_EQ(attribute({"mysqli::query", "helper", "caller"}, dal).identity, "caller");
}

TEST(Attribute, MethodProceduresAndCase) {
  php::DalSet dal;
  dal.seeds = dal.subclasses = {"PDO", "Conn"};
  dal.procedures = {"Db::get"};
  EXPECT_EQ(attribute({"pdo::query", "CONN::run", "db::get", "Page::render"}, dal).identity, "Page::render");
  EXPECT_EQ(attribute({"Conn->run", "Db->get", "view"}, dal).identity, "view");
}

TEST(Attribute, AllFramesInDalFallsBackToOutermost) {
  php::DalSet dal = corpus::fixture_dal();
  Attribution a = attribute({"mysqli::query", "executeQuery"}, dal);
  EXPECT_EQ(a.identity, "executeQuery");
  EXPECT_TRUE(a.all_in_dal);
}

TEST(Attribute, InvariantUnderOuterFrames) {
  php::DalSet dal = corpus::fixture_dal();
  Frames f = kPublicInfoFrames;
  std::string base = attribute(f, dal).identity;
  for (const char* outer : {"main", "index.php", "Router::dispatch"}) {
    f.push_back(outer);
    EXPECT_EQ(attribute(f, dal).identity, base);
  }
}

TEST(Attribute, ResultIsNeverAccessLayer) {
  php::DalSet dal = corpus::fixture_dal();
  std::mt19937_64 rng(8);
  const char* pool[] = {"mysqli::query", "PDO::exec", "DatabaseConnectionmysqli::execute", "executeQuery",
                        "app_a", "Ctl::act", "app_b"};
  for (int i = 0; i < 500; ++i) {
    Frames f;
    std::size_t n = 1 + rng() % 5;
    for (std::size_t k = 0; k < n; ++k) f.push_back(pool[rng() % std::size(pool)]);
    Attribution a = attribute(f, dal);
    if (a.all_in_dal) {
      EXPECT_EQ(a.identity, f.back());
      continue;
    }
    EXPECT_FALSE(dal.is_procedure(a.identity));
    auto sep = a.identity.find("::");
    if (sep != std::string::npos) {
      EXPECT_FALSE(dal.is_dal_class(a.identity.substr(0, sep)));
    }
  }
}
