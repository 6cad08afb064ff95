// End-to-end acceptance run. One PASS/FAIL line per criterion, detail lines
// indented beneath it; exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "query_gen.hpp"
#include "sqlblock/corpus.hpp"
#include "sqlblock/gate.hpp"
#include "sqlblock/io.hpp"
#include "sqlblock/training.hpp"

using namespace sqlblock;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Env {
  std::string cli;
  fs::path fixtures;
  fs::path work;
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void need(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok    " : "MISS  ") + what);
  }
  void note(const std::string& s) { notes.push_back("      " + s); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// Runs the CLI with stdout to `out_file`; returns the exit status.
int run_cli(const Env& env, const std::string& args, const fs::path& out_file) {
  std::string cmd = quote(env.cli) + " " + args + " > " + quote(out_file.string()) + " 2>> " +
                    quote((env.work / "cli.stderr").string());
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  try {
    return read_file(p);
  } catch (const IoError&) {
    return {};
  }
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

profile::Profile train_on(const std::vector<std::string>& tagged, const php::DalSet& dal) {
  std::vector<profile::TrainingRecord> rs;
  for (const auto& q : tagged) rs.push_back(profile::record_training(q));
  return profile::build_profile(rs, dal).profile;
}

// --------------------------------------------------------------------------

Outcome c1(const Env& env) {
  Outcome o;
  const fs::path app_tree = env.fixtures / "app_tree", golden = env.fixtures / "golden", w = env.work / "c1";
  fs::create_directories(w);

  php::AnalyzerOptions only_mysqli;
  only_mysqli.seeds = {"mysqli"};
  php::DalSet lib = php::analyze_corpus(app_tree, only_mysqli).dal;
  o.need(lib.subclasses == php::NameSet{"mysqli", "DatabaseConnectionmysqli"} &&
             lib.procedures == php::NameSet{"executeQuery"},
         "analysis of the two-file tree: {mysqli, DatabaseConnectionmysqli; executeQuery}");

  auto t0 = Clock::now();
  int a = run_cli(env, "analyze " + quote(app_tree.string()) + " -o " + quote((w / "app.dal").string()), w / "a.out");
  int t = run_cli(env, "train -i " + quote((golden / "query.txt").string()) + " -o " + quote((w / "train.log").string()),
                  w / "t.out");
  int b = run_cli(env,
                  "build-profile -i " + quote((w / "train.log").string()) + " -d " + quote((w / "app.dal").string()) +
                      " -o " + quote((w / "app.profile").string()),
                  w / "b.out");
  std::string query = slurp(golden / "query.txt");
  while (!query.empty() && query.back() == '\n') query.pop_back();
  int c = run_cli(env,
                  "check -p " + quote((w / "app.profile").string()) + " -d " + quote((w / "app.dal").string()) + " " +
                      quote(query),
                  w / "check.out");
  double wall = seconds_since(t0);

  o.need(a == 0 && slurp(w / "app.dal") == slurp(golden / "expected.dal"), "CLI analyze matches expected DAL file");
  o.need(t == 0 && slurp(w / "train.log") == slurp(golden / "training.log"), "training record is byte-exact");

  bool mapped = false;
  try {
    profile::Profile p = profile::parse_profile(slurp(w / "app.profile"));
    const auto* s = p.find("get_public_info");
    mapped = s && s->size() == 1 && profile::format_descriptor(*s->begin()) == "0|public_info|none|>:FIELD:LITERAL";
  } catch (const std::exception&) {
  }
  o.need(b == 0 && mapped, "get_public_info -> (SELECT, {public_info}, none, {(>,FIELD,LITERAL)})");
  o.need(slurp(w / "app.profile") == slurp(golden / "expected.profile"), "profile matches expected file");
  o.need(c == 0 && slurp(w / "check.out") == "ALLOW\n", "check answers ALLOW");
  o.need(wall < 1.0, "pipeline wall time " + fmt("%.3f s", wall) + " < 1 s");
  return o;
}

Outcome c2(const Env&) {
  Outcome o;
  php::DalSet dal = corpus::fixture_dal();
  std::size_t good = 0, total = 0;
  for (const auto& fc : corpus::fixture_cases()) {
    ++total;
    std::vector<std::string> benign;
    for (const auto& v : fc.variants) benign.insert(benign.end(), v.benign.begin(), v.benign.end());
    profile::Profile p = train_on(benign, dal);
    const auto* set = p.find(fc.function);
    std::string got = set && set->size() == 1 ? profile::format_descriptor(*set->begin()) : "<none>";
    corpus::Report r = corpus::replay(fc.variants, p, dal);
    bool ok = got == fc.descriptor && r.ok();
    good += ok;
    std::string reasons;
    for (const auto& s : r.results) {
      for (auto reason : s.reasons) reasons += std::string(reasons.empty() ? "" : ",") + enforce::reason_name(reason);
    }
    o.need(ok, fc.id + " " + fc.function + " [" + got + "] " + reasons);
  }
  o.need(total == 11 && good == total, std::to_string(good) + "/" + std::to_string(total) + " fixture scenarios");
  return o;
}

Outcome c3(const Env& env) {
  Outcome o;
  fs::path dir = env.work / "corpus";
  fs::remove_all(dir);
  int g = run_cli(env, "gen-corpus -o " + quote(dir.string()), env.work / "gen.out");
  o.need(g == 0, "gen-corpus wrote the scenario directory");
  std::vector<corpus::Scenario> sc;
  try {
    sc = corpus::load_corpus(dir);
  } catch (const std::exception& e) {
    o.need(false, std::string("load corpus: ") + e.what());
    return o;
  }
  std::set<corpus::Category> cats;
  for (const auto& s : sc) cats.insert(s.category);
  o.need(cats.size() == 8, std::to_string(cats.size()) + " categories present");

  php::DalSet dal = corpus::fixture_dal();
  profile::Profile p = corpus::train(sc, dal).profile;
  for (bool allow_parsefail : {false, true}) {
    corpus::Report r = corpus::replay(sc, p, dal, {false, allow_parsefail});
    std::size_t mal = 0, mal_blocked = 0, ben = 0, ben_blocked = 0, ill = 0, ill_blocked = 0;
    for (const auto& s : r.results) {
      ben += s.benign_total;
      ben_blocked += s.benign_blocked;
      if (corpus::is_defended(s.category)) {
        mal += s.malicious_total;
        mal_blocked += s.malicious_blocked;
      } else {
        ill += s.malicious_total;
        ill_blocked += s.malicious_blocked;
      }
    }
    std::string pol = allow_parsefail ? "parsefail=allow" : "parsefail=block";
    o.need(mal > 0 && mal_blocked == mal && r.ok(),
           pol + ": defended malicious blocked " + std::to_string(mal_blocked) + "/" + std::to_string(mal));
    o.need(ben_blocked == 0, pol + ": benign blocked " + std::to_string(ben_blocked) + "/" + std::to_string(ben));
    o.note(pol + ": Illegal/Incorrect blocked " + std::to_string(ill_blocked) + "/" + std::to_string(ill) +
           " (follows the parse-failure policy)");
  }
  int rp = run_cli(env, "replay --corpus " + quote(dir.string()), env.work / "replay.out");
  o.need(rp == 0, "CLI replay exits 0");
  return o;
}

Outcome c4(const Env&) {
  Outcome o;
  php::DalSet dal = corpus::fixture_dal();
  // One stream: the first 2000 train, the last 1000 are held out.
  auto all = corpus::random_benign(20240611, 3000, 24);
  std::vector<std::string> train(all.begin(), all.begin() + 2000), test(all.begin() + 2000, all.end());
  profile::Profile p = train_on(train, dal);
  std::set<std::string> fns;
  std::size_t blocked = 0, unseen = 0;
  std::set<std::string> seen(train.begin(), train.end());
  for (const auto& q : test) {
    enforce::Verdict v = enforce::decide(q, p, dal);
    fns.insert(v.identity);
    blocked += !v.allow;
    unseen += !seen.count(q);
  }
  o.need(fns.size() >= 20, std::to_string(fns.size()) + " functions exercised");
  o.note(std::to_string(unseen) + " of 1000 held-out queries never occur verbatim in training");
  o.need(blocked == 0, std::to_string(blocked) + " of 1000 benign queries blocked");
  return o;
}

Outcome c5(const Env&) {
  Outcome o;
  php::DalSet dal = corpus::fixture_dal();
  std::mt19937_64 rng(77);
  std::size_t agree = 0, total = 0, allowed = 0;
  std::string first_miss;
  for (int round = 0; round < 10; ++round) {
    std::map<std::string, std::vector<oracle::Shape>> shapes;
    std::map<std::string, std::vector<oracle::Generated>> trained;
    std::vector<std::string> training;
    for (int f = 0; f < 8; ++f) {
      std::string fn = "fn" + std::to_string(f);
      for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) {
        auto g = oracle::random_query(rng);
        shapes[fn].push_back(g.shape);
        trained[fn].push_back(g);
        training.push_back(corpus::tagged(g.sql, fn));
      }
    }
    profile::Profile p = train_on(training, dal);
    for (int i = 0; i < 1000; ++i) {
      // fn8 has no profile entry; half of the rest are near a trained query
      std::string fn = "fn" + std::to_string(rng() % 9);
      auto g = fn != "fn8" && rng() % 2
                   ? oracle::near_query(rng, trained[fn][rng() % trained[fn].size()])
                   : oracle::random_query(rng);
      bool want = oracle::allows(g.shape, shapes[fn]);
      bool got = enforce::decide(corpus::tagged(g.sql, fn), p, dal).allow;
      ++total;
      allowed += want;
      if (want == got) ++agree;
      else if (first_miss.empty()) first_miss = fn + ": " + g.sql;
    }
  }
  o.note(std::to_string(allowed) + " oracle ALLOWs, " + std::to_string(total - allowed) + " BLOCKs");
  o.need(total == 10000 && agree == total, std::to_string(agree) + "/" + std::to_string(total) + " agree" +
                                               (first_miss.empty() ? "" : "; first miss " + first_miss));
  return o;
}

Outcome c6(const Env&) {
  Outcome o;
  php::DalSet dal = corpus::fixture_dal();
  auto q = [](const char* list) { return corpus::tagged(std::string("SELECT * FROM t WHERE id IN ") + list, "f"); };
  profile::Profile two = train_on({q("(1,2)")}, dal), one = train_on({q("(1)")}, dal);
  o.need(enforce::decide(q("(1)"), two, dal).allow, "trained IN (1,2), IN (1) allowed");
  o.need(enforce::decide(q("(1,2)"), one, dal).allow, "trained IN (1), IN (1,2) allowed");
  o.need(enforce::decide(q("(7,8,9,10)"), one, dal).allow, "trained IN (1), IN (7,8,9,10) allowed");
  return o;
}

Outcome c7(const Env&) {
  Outcome o;
  php::DalSet dal = corpus::fixture_dal();
  auto sc = corpus::default_corpus();
  profile::Profile p = corpus::train(sc, dal).profile;

  std::string in_list = "SELECT * FROM public_info WHERE id IN (";
  for (int i = 0; in_list.size() < 3900; ++i) in_list += (i ? "," : "") + std::to_string(100000 + i);
  in_list += ")";
  std::string wide = "SELECT * FROM public_info WHERE id > 0";
  while (wide.size() < 3900) wide += " OR id > 1 AND id > 2";
  std::vector<std::pair<std::string, std::string>> probes{
      {"public_info query", corpus::tagged("SELECT * FROM public_info where id > 0", "get_public_info")},
      {"tautology", corpus::tagged("SELECT * FROM public_info where id > 0 OR 1=1", "get_public_info")},
      {"in-list", corpus::tagged(in_list, "get_public_info")},
      {"and/or chain", corpus::tagged(wide, "get_public_info")},
  };
  for (const auto& [name, q] : probes) {
    std::vector<double> us;
    for (int i = 0; i < 2000; ++i) {
      auto t0 = Clock::now();
      volatile bool sink = enforce::decide(q, p, dal).allow;
      (void)sink;
      us.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    }
    std::nth_element(us.begin(), us.begin() + us.size() / 2, us.end());
    double med = us[us.size() / 2];
    o.need(q.size() <= 4096 && med < 1000.0,
           "decide median " + name + " (" + std::to_string(q.size()) + " B): " + fmt("%.1f us", med));
  }

  // Gateway: 10,000 requests over 8 connections, payloads drawn from a fixed
  // set of distinct benign and malicious queries so the same statements
  // recur the way they do under an application's steady load.
  std::vector<std::string> payloads;
  for (const auto& fc : corpus::fixture_cases()) {
    sc.insert(sc.end(), fc.variants.begin(), fc.variants.end());
  }
  p = corpus::train(sc, dal).profile;
  for (const auto& s : sc) {
    payloads.insert(payloads.end(), s.benign.begin(), s.benign.end());
    payloads.insert(payloads.end(), s.malicious.begin(), s.malicious.end());
  }
  std::sort(payloads.begin(), payloads.end());
  payloads.erase(std::unique(payloads.begin(), payloads.end()), payloads.end());
  auto st = std::make_shared<enforce::EnforcementState>();
  st->profile = p;
  st->dal = dal;
  gate::OverheadResult cached = gate::measure_overhead(st, payloads, 10000, 8, 7, 4096);
  gate::OverheadResult raw = gate::measure_overhead(st, payloads, 10000, 8, 3, 0);
  o.need(cached.errors == 0 && raw.errors == 0, "no transport errors");
  o.need(cached.overhead() < 0.05,
         "gateway overhead, default config: " + fmt("%+.1f%%", cached.overhead() * 100) + " (echo " +
             fmt("%.3f s", cached.echo_seconds) + ", enforce " + fmt("%.3f s", cached.enforce_seconds) + ", " +
             std::to_string(payloads.size()) + " distinct payloads, cache hits " + std::to_string(cached.cache_hits) +
             "/" + std::to_string(cached.cache_hits + cached.cache_misses) + ")");
  o.note("verdict cache disabled: " + fmt("%+.1f%%", raw.overhead() * 100) + " (echo " +
         fmt("%.3f s", raw.echo_seconds) + ", enforce " + fmt("%.3f s", raw.enforce_seconds) + ")");
  o.note("hardware threads: " + std::to_string(std::thread::hardware_concurrency()));
  return o;
}

Outcome c8(const Env& env) {
  Outcome o;
  fs::path w = env.work / "c8";
  fs::create_directories(w);
  std::vector<std::string> dal_runs, prof_runs;
  for (int i = 0; i < 3; ++i) {
    std::string n = std::to_string(i);
    fs::path dal = w / ("drupal" + n + ".dal"), fdal = w / ("app" + n + ".dal"), prof = w / ("app" + n + ".profile");
    run_cli(env, "analyze " + quote((env.fixtures / "drupal_like").string()) + " -o " + quote(dal.string()),
            w / "x.out");
    run_cli(env, "analyze " + quote((env.fixtures / "app_tree").string()) + " -o " + quote(fdal.string()), w / "x.out");
    run_cli(env,
            "build-profile -i " + quote((env.fixtures / "golden" / "training.log").string()) + " -d " +
                quote(fdal.string()) + " -o " + quote(prof.string()),
            w / "x.out");
    dal_runs.push_back(slurp(dal) + "\x1f" + slurp(fdal));
    prof_runs.push_back(slurp(prof));
  }
  auto same = [](const std::vector<std::string>& v) {
    return !v.front().empty() && std::all_of(v.begin(), v.end(), [&](const std::string& s) { return s == v.front(); });
  };
  o.need(same(dal_runs), "analyze output identical across 3 runs");
  o.need(same(prof_runs), "build-profile output identical across 3 runs");

  // Shuffled training log must serialize the same profile.
  auto recs = profile::parse_training_log(slurp(env.fixtures / "golden" / "training.log"));
  auto more = corpus::random_benign(9, 300, 20);
  for (const auto& q : more) recs.push_back(profile::record_training(q));
  php::DalSet dal = corpus::fixture_dal();
  std::string ref = profile::serialize_profile(profile::build_profile(recs, dal).profile);
  std::mt19937_64 rng(4);
  bool stable = true;
  for (int i = 0; i < 5; ++i) {
    std::shuffle(recs.begin(), recs.end(), rng);
    stable = stable && profile::serialize_profile(profile::build_profile(recs, dal).profile) == ref;
  }
  o.need(stable, "profile bytes independent of record order");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  Env env;
  std::string fixtures, work;
  app.add_option("--cli", env.cli, "sqlblock executable")->required();
  app.add_option("--fixtures", fixtures, "fixture directory")->required();
  app.add_option("--work", work, "scratch directory")->required();
  CLI11_PARSE(app, argc, argv);
  env.fixtures = fixtures;
  env.work = work;
  fs::remove_all(env.work);
  fs::create_directories(env.work);

  using Check = Outcome (*)(const Env&);
  const std::pair<const char*, Check> checks[] = {
      {"C1 golden pipeline", c1},     {"C2 fixture scenarios", c2},   {"C3 category corpus", c3},
      {"C4 benign false positives", c4}, {"C5 brute-force agreement", c5}, {"C6 IN-list length", c6},
      {"C7 performance", c7},         {"C8 determinism", c8},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn(env);
    } catch (const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, seconds_since(t0));
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/8 criteria passed\n", 8 - failed);
  return failed ? 1 : 0;
}
