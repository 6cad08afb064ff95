#include <benchmark/benchmark.h>

#include "sqlblock/corpus.hpp"
#include "sqlblock/sql_lexer.hpp"
#include "sqlblock/sql_parser.hpp"
#include "sqlblock/training.hpp"

using namespace sqlblock;

namespace {

struct Setup {
  php::DalSet dal = corpus::fixture_dal();
  profile::Profile prof;
  std::vector<std::string> queries;

  Setup() {
    auto sc = corpus::default_corpus();
    prof = corpus::train(sc, dal).profile;
    std::string in = "SELECT * FROM public_info WHERE id IN (";
    for (int i = 0; in.size() < 3900; ++i) in += (i ? "," : "") + std::to_string(100000 + i);
    in += ")";
    queries = {
        corpus::tagged("SELECT * FROM public_info where id > 0", "get_public_info"),
        corpus::tagged("SELECT * FROM public_info where id > 0 OR 1=1", "get_public_info"),
        corpus::tagged("SELECT * FROM public_info where id > 0; DROP TABLE users", "get_public_info"),
        corpus::tagged(in, "get_public_info"),
    };
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_Decide(benchmark::State& state) {
  const Setup& s = setup();
  const std::string& q = s.queries[static_cast<std::size_t>(state.range(0))];
  for (auto _ : state) benchmark::DoNotOptimize(enforce::decide(q, s.prof, s.dal));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * q.size()));
}
BENCHMARK(BM_Decide)->DenseRange(0, 3);

void BM_Tokenize(benchmark::State& state) {
  const std::string q = tag::decode_tag(setup().queries[static_cast<std::size_t>(state.range(0))]).sql;
  for (auto _ : state) benchmark::DoNotOptimize(sql::tokenize(q));
}
BENCHMARK(BM_Tokenize)->Arg(0)->Arg(3);

void BM_Parse(benchmark::State& state) {
  const std::string q = tag::decode_tag(setup().queries[static_cast<std::size_t>(state.range(0))]).sql;
  for (auto _ : state) benchmark::DoNotOptimize(sql::parse_statements(q));
}
BENCHMARK(BM_Parse)->Arg(0)->Arg(3);

void BM_DecodeTag(benchmark::State& state) {
  const std::string& q = setup().queries[0];
  for (auto _ : state) benchmark::DoNotOptimize(tag::decode_tag(q));
}
BENCHMARK(BM_DecodeTag);

}  // namespace

// The packaged benchmark_main archive carries LTO objects from another
// compiler release, so the entry point lives here.
BENCHMARK_MAIN();
