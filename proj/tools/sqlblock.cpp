#include <csignal>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <pthread.h>
#include <thread>

#include "CLI11.hpp"
#include "sqlblock/corpus.hpp"
#include "sqlblock/dal.hpp"
#include "sqlblock/enforcer.hpp"
#include "sqlblock/gate.hpp"
#include "sqlblock/io.hpp"
#include "sqlblock/training.hpp"

namespace sb = sqlblock;

namespace {

// sysexits(3)
constexpr int kUsage = 64;
constexpr int kDataErr = 65;
constexpr int kNoInput = 66;
constexpr int kUnavailable = 69;
constexpr int kSoftware = 70;
constexpr int kBlocked = 2;

sb::php::DalSet load_dal(const std::string& path) {
  if (path.empty()) return sb::php::DalSet{};
  return sb::php::parse_dal(sb::read_file(path));
}

std::string read_input(const std::string& arg) {
  if (arg != "-") return arg;
  std::string s((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void emit(const std::string& out_path, const std::string& data) {
  if (out_path.empty() || out_path == "-") std::cout << data;
  else sb::write_file_atomic(out_path, data);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  const std::string text = sb::read_file(path);
  for (auto l : sb::text::split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!sb::text::trim(l).empty()) out.emplace_back(l);
  }
  return out;
}

bool parse_allow(const std::string& v) { return v == "allow"; }

struct Options {
  std::string php_root, out, in, dal, profile, config, corpus, queries, query = "-";
  std::vector<std::string> seeds, initializers;
  std::string untagged = "block", parsefail = "block";
  std::size_t n = 10000, concurrency = 8, trials = 5;
  bool gateway = false, fixtures = true, no_cache = false;
};

sb::enforce::Policy policy_of(const Options& o) {
  return {parse_allow(o.untagged), parse_allow(o.parsefail)};
}

int cmd_analyze(const Options& o) {
  sb::php::AnalyzerOptions opts;
  if (!o.seeds.empty()) opts.seeds = o.seeds;
  if (!o.initializers.empty()) opts.initializers = o.initializers;
  sb::php::AnalysisResult r = sb::php::analyze_corpus(o.php_root, opts);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  emit(o.out, sb::php::serialize_dal(r.dal));
  std::cerr << r.files_scanned << " files, " << r.dal.subclasses.size() << " classes, " << r.dal.procedures.size()
            << " procedures\n";
  return 0;
}

int cmd_train(const Options& o) {
  std::string log;
  int rc = 0;
  for (const auto& q : read_lines(o.in)) {
    try {
      log += sb::profile::format_record(sb::profile::record_training(q)) + "\n";
    } catch (const std::exception& e) {
      std::cerr << "skipped: " << e.what() << "\n";
      rc = kDataErr;
    }
  }
  emit(o.out, log);
  return rc;
}

int cmd_build(const Options& o) {
  std::vector<std::string> errors;
  auto recs = sb::profile::parse_training_log(sb::read_file(o.in), &errors);
  sb::php::DalSet dal = load_dal(o.dal);
  sb::profile::BuildReport r = sb::profile::build_profile(recs, dal);
  for (const auto& e : errors) std::cerr << "error: " << e << "\n";
  for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  emit(o.out, sb::profile::serialize_profile(r.profile));
  std::cerr << r.used << " records, " << r.profile.entries.size() << " functions\n";
  return 0;
}

int cmd_check(const Options& o) {
  sb::profile::Profile p = sb::profile::parse_profile(sb::read_file(o.profile));
  sb::php::DalSet dal = load_dal(o.dal);
  sb::enforce::Verdict v = sb::enforce::decide(read_input(o.query), p, dal, policy_of(o));
  std::cout << v.line() << "\n";
  return v.allow ? 0 : kBlocked;
}

int cmd_gen_corpus(const Options& o) {
  std::vector<sb::corpus::Scenario> all = sb::corpus::default_corpus();
  if (o.fixtures) {
    for (auto& fc : sb::corpus::fixture_cases()) all.insert(all.end(), fc.variants.begin(), fc.variants.end());
  }
  sb::corpus::write_corpus(o.out, all);
  std::cerr << all.size() << " scenarios written to " << o.out << "\n";
  return 0;
}

int cmd_replay(const Options& o) {
  auto scenarios = sb::corpus::load_corpus(o.corpus);
  sb::php::DalSet dal = o.dal.empty() ? sb::corpus::fixture_dal() : load_dal(o.dal);
  sb::profile::Profile p;
  if (!o.profile.empty()) {
    p = sb::profile::parse_profile(sb::read_file(o.profile));
  } else if (!scenarios.empty()) {
    p = sb::corpus::train(scenarios, dal).profile;
  }
  sb::corpus::Report rep = sb::corpus::replay(scenarios, p, dal, policy_of(o));
  std::cout << sb::corpus::format_report(rep);
  return rep.ok() ? 0 : 1;
}

std::vector<std::string> bench_queries(const Options& o) {
  if (!o.queries.empty()) return read_lines(o.queries);
  std::vector<std::string> qs;
  for (const auto& s : sb::corpus::default_corpus()) {
    qs.insert(qs.end(), s.benign.begin(), s.benign.end());
    qs.insert(qs.end(), s.malicious.begin(), s.malicious.end());
  }
  return qs;
}

int cmd_bench(const Options& o) {
  auto state = std::make_shared<sb::enforce::EnforcementState>();
  std::vector<std::string> qs = bench_queries(o);
  if (qs.empty()) throw CLI::ValidationError("no queries to run");
  if (!o.profile.empty()) {
    state->profile = sb::profile::parse_profile(sb::read_file(o.profile));
    state->dal = load_dal(o.dal);
  } else {
    state->dal = sb::corpus::fixture_dal();
    state->profile = sb::corpus::train(sb::corpus::default_corpus(), state->dal).profile;
  }
  state->policy = policy_of(o);

  std::cout << std::fixed << std::setprecision(2);
  if (o.gateway) {
    auto r = sb::gate::measure_overhead(state, qs, o.n, o.concurrency, o.trials, o.no_cache ? 0 : 4096);
    std::cout << "gateway n=" << o.n << " concurrency=" << o.concurrency << " trials=" << o.trials
              << " echo_s=" << std::setprecision(4) << r.echo_seconds << " enforce_s=" << r.enforce_seconds
              << std::setprecision(2) << " overhead_pct=" << r.overhead() * 100 << " cache_hits=" << r.cache_hits
              << " cache_misses=" << r.cache_misses << " errors=" << r.errors << "\n";
    return r.errors ? kSoftware : 0;
  }

  sb::gate::LoadStats st;
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  std::size_t allowed = 0;
  for (std::size_t i = 0; i < o.n; ++i) {
    auto s = clock::now();
    allowed += state->decide(qs[i % qs.size()]).allow;
    st.latency_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - s).count());
  }
  st.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  std::cout << "decide n=" << o.n << " p50_us=" << st.percentile(50) << " p90_us=" << st.percentile(90)
            << " p99_us=" << st.percentile(99) << " max_us=" << st.percentile(100) << " allowed=" << allowed << "\n";
  return 0;
}

int cmd_serve(const Options& o) {
  sb::gate::GateConfig cfg = sb::gate::parse_config(sb::read_file(o.config));
  sb::enforce::StatePtr state = cfg.mode == sb::gate::Mode::Enforce ? sb::gate::load_state(cfg) : nullptr;
  sb::gate::GateServer server(cfg, state);

  // Handle signals on one thread; everything else keeps them blocked.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  std::uint16_t port = server.start();
  std::cerr << "listening on " << cfg.host << ":" << port << " mode=" << sb::gate::mode_name(cfg.mode) << std::endl;

  std::thread sig([&] {
    for (;;) {
      int signo = 0;
      if (sigwait(&set, &signo) != 0) continue;
      if (signo == SIGHUP) {
        if (cfg.mode != sb::gate::Mode::Enforce) continue;
        try {
          server.reload(sb::gate::load_state(cfg));
          std::cerr << "reloaded " << cfg.profile_path << std::endl;
        } catch (const std::exception& e) {
          std::cerr << "reload failed, keeping previous profile: " << e.what() << std::endl;
        }
        continue;
      }
      server.stop();
      return;
    }
  });
  server.run();
  pthread_kill(sig.native_handle(), SIGTERM);
  sig.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sqlblock: per-function SQL query profiles and enforcement"};
  app.require_subcommand(1);
  Options o;

  auto* analyze = app.add_subcommand("analyze", "find the database access layer of a PHP tree");
  analyze->add_option("php-root", o.php_root, "PHP source root")->required();
  analyze->add_option("-o,--output", o.out, "DAL file (default stdout)");
  analyze->add_option("--seed", o.seeds, "DB-API class (repeatable; default PDO, mysqli)");
  analyze->add_option("--initializer", o.initializers, "connection function (repeatable)");

  auto* train = app.add_subcommand("train", "record tagged queries, one per line, as a training log");
  train->add_option("-i,--input", o.in, "tagged queries")->required();
  train->add_option("-o,--output", o.out, "training log (default stdout)");

  auto* build = app.add_subcommand("build-profile", "compile a training log into a profile");
  build->add_option("-i,--input", o.in, "training log")->required();
  build->add_option("-d,--dal", o.dal, "DAL file")->required();
  build->add_option("-o,--output", o.out, "profile (default stdout)");

  auto add_policy = [&](CLI::App* c) {
    c->add_option("--untagged", o.untagged, "untagged queries")->check(CLI::IsMember({"allow", "block"}));
    c->add_option("--parsefail", o.parsefail, "unparseable queries")->check(CLI::IsMember({"allow", "block"}));
  };

  auto* check = app.add_subcommand("check", "decide one tagged query (exit 0 ALLOW, 2 BLOCK)");
  check->add_option("-p,--profile", o.profile, "profile")->required();
  check->add_option("-d,--dal", o.dal, "DAL file")->required();
  check->add_option("query", o.query, "tagged query, or - for stdin")->required();
  add_policy(check);

  auto* serve = app.add_subcommand("serve", "run the framed TCP gate");
  serve->add_option("-c,--config", o.config, "key=value config")->required();

  auto* gen = app.add_subcommand("gen-corpus", "write the bundled scenarios");
  gen->add_option("-o,--output", o.out, "directory")->required();
  gen->add_flag("!--no-fixtures", o.fixtures, "omit the per-vulnerability fixture cases");

  auto* replay = app.add_subcommand("replay", "replay a scenario corpus (exit 1 on any miss)");
  replay->add_option("--corpus", o.corpus, "scenario directory")->required();
  replay->add_option("-p,--profile", o.profile, "profile (default: trained from the corpus)");
  replay->add_option("-d,--dal", o.dal, "DAL file (default: bundled fixture layer)");
  add_policy(replay);

  auto* bench = app.add_subcommand("bench", "decide latency, or gateway overhead with --gateway");
  bench->add_option("-p,--profile", o.profile, "profile (default: trained from the bundled corpus)");
  bench->add_option("-d,--dal", o.dal, "DAL file");
  bench->add_option("-n", o.n, "requests")->check(CLI::PositiveNumber);
  bench->add_option("-q,--queries", o.queries, "tagged queries, one per line");
  bench->add_flag("--gateway", o.gateway, "compare enforce against echo over loopback");
  bench->add_option("--concurrency", o.concurrency, "client connections")->check(CLI::PositiveNumber);
  bench->add_option("--trials", o.trials, "interleaved rounds")->check(CLI::PositiveNumber);
  bench->add_flag("--no-cache", o.no_cache, "disable the verdict cache");
  add_policy(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*analyze) return cmd_analyze(o);
    if (*train) return cmd_train(o);
    if (*build) return cmd_build(o);
    if (*check) return cmd_check(o);
    if (*serve) return cmd_serve(o);
    if (*gen) return cmd_gen_corpus(o);
    if (*replay) return cmd_replay(o);
    if (*bench) return cmd_bench(o);
  } catch (const sb::IoError& e) {
    std::cerr << "sqlblock: " << e.what() << "\n";
    return kNoInput;
  } catch (const sb::gate::BindError& e) {
    std::cerr << "sqlblock: " << e.what() << "\n";
    return kUnavailable;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "sqlblock: " << e.what() << "\n";
    return kUsage;
  } catch (const std::runtime_error& e) {
    // format errors, config errors, failed builds
    std::cerr << "sqlblock: " << e.what() << "\n";
    return kDataErr;
  } catch (const std::exception& e) {
    std::cerr << "sqlblock: " << e.what() << "\n";
    return kSoftware;
  }
  return kUsage;
}
