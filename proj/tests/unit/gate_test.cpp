#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "sqlblock/corpus.hpp"
#include "sqlblock/gate.hpp"
#include "sqlblock/io.hpp"
#include "sqlblock/training.hpp"

using namespace sqlblock;
using namespace sqlblock::gate;
namespace fs = std::filesystem;

namespace {

const std::string kPublicInfo = corpus::tagged("SELECT * FROM public_info where id > 0", "get_public_info");
const std::string kTaut = corpus::tagged("SELECT * FROM public_info where id > 0 OR 1=1", "get_public_info");

enforce::StatePtr info_state() {
  auto st = std::make_shared<enforce::EnforcementState>();
  st->dal = corpus::fixture_dal();
  st->profile = profile::build_profile({profile::record_training(kPublicInfo)}, st->dal).profile;
  return st;
}

GateConfig enforce_config(std::size_t cache = 4096) {
  GateConfig c;
  c.mode = Mode::Enforce;
  c.profile_path = "(in memory)";
  c.verdict_cache = cache;
  return c;
}

// Runs a server on an ephemeral loopback port for the scope's lifetime.
struct Running {
  GateServer server;
  std::thread loop;

  Running(GateConfig cfg, enforce::StatePtr st) : server(std::move(cfg), std::move(st)) {
    server.start();
    loop = std::thread([this] { server.run(); });
  }
  ~Running() {
    server.stop();
    loop.join();
  }
  std::uint16_t port() const { return server.port(); }
};

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("sqlblock_gate_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Framing, EncodeLayout) {
  EXPECT_EQ(encode_frame("abc"), std::string("\0\0\0\3abc", 7));
  EXPECT_EQ(encode_frame(""), std::string(4, '\0'));
}

TEST(Framing, DecoderByteAtATime) {
  std::string stream = encode_frame("first") + encode_frame("") + encode_frame(std::string(300, 'x'));
  FrameDecoder d;
  std::vector<std::string> got;
  std::string out;
  for (char c : stream) {
    d.feed(&c, 1);
    while (d.next(out) == FrameDecoder::Status::Frame) got.push_back(out);
  }
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0], "first");
  EXPECT_EQ(got[1], "");
  EXPECT_EQ(got[2], std::string(300, 'x'));
  EXPECT_EQ(d.buffered(), 0u);
}

TEST(Framing, DecoderOversize) {
  FrameDecoder d(8);
  std::string f = encode_frame("123456789");
  d.feed(f.data(), 4);
  std::string out;
  EXPECT_EQ(d.next(out), FrameDecoder::Status::Oversize);
  FrameDecoder ok(9);
  ok.feed(f.data(), f.size());
  EXPECT_EQ(ok.next(out), FrameDecoder::Status::Frame);
}

TEST(Framing, SocketPair) {
  int sv[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv), 0);
  ASSERT_TRUE(send_frame(sv[0], "hello"));
  std::string out;
  ASSERT_TRUE(recv_frame(sv[1], out, 64));
  EXPECT_EQ(out, "hello");
  ASSERT_TRUE(send_frame(sv[0], std::string(100, 'y')));
  bool over = false;
  EXPECT_FALSE(recv_frame(sv[1], out, 64, &over));
  EXPECT_TRUE(over);
  ::close(sv[0]);
  EXPECT_FALSE(recv_frame(sv[1], out, 64));
  ::close(sv[1]);
}

TEST(Config, Parse) {
  GateConfig c = parse_config(
      "# gate\n"
      "mode = enforce\n"
      "listen=0.0.0.0:7400\n"
      "profile=/srv/app.profile\n"
      "dal=/srv/app.dal\n"
      "untagged=allow\n"
      "parsefail=block\n"
      "max_frame=65536\n"
      "verdict_cache=0\n");
  EXPECT_EQ(c.mode, Mode::Enforce);
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 7400);
  EXPECT_EQ(c.profile_path, "/srv/app.profile");
  EXPECT_EQ(c.dal_path, "/srv/app.dal");
  EXPECT_TRUE(c.policy.allow_untagged);
  EXPECT_FALSE(c.policy.allow_parse_failure);
  EXPECT_EQ(c.max_frame, 65536u);
  EXPECT_EQ(c.verdict_cache, 0u);
}

TEST(Config, Errors) {
  auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("profile=p\nmode=audit\n"), 2);
  EXPECT_EQ(line_of("profile=p\nlisten=7400\n"), 2);
  EXPECT_EQ(line_of("profile=p\nlisten=h:99999\n"), 2);
  EXPECT_EQ(line_of("profile=p\n\ncolour=blue\n"), 3);
  EXPECT_EQ(line_of("profile=p\nuntagged=maybe\n"), 2);
  EXPECT_EQ(line_of("profile=p\nmax_frame=0\n"), 2);
  EXPECT_EQ(line_of("profile p\n"), 1);
  EXPECT_EQ(line_of("mode=enforce\n"), 0);
  EXPECT_EQ(line_of("mode=train\n"), 0);
  EXPECT_EQ(line_of("mode=echo\n"), -1);
}

TEST(Config, LoadStateFromFiles) {
  TempDir t;
  auto st = info_state();
  write_file_atomic(t.path / "p.profile", profile::serialize_profile(st->profile));
  write_file_atomic(t.path / "a.dal", php::serialize_dal(st->dal));
  GateConfig c = parse_config("profile=" + (t.path / "p.profile").string() + "\ndal=" + (t.path / "a.dal").string() +
                              "\nparsefail=allow\n");
  auto loaded = load_state(c);
  EXPECT_EQ(loaded->profile, st->profile);
  EXPECT_TRUE(loaded->policy.allow_parse_failure);
  EXPECT_TRUE(loaded->decide(kPublicInfo).allow);

  GateConfig missing = c;
  missing.profile_path = (t.path / "nope.profile").string();
  EXPECT_THROW(load_state(missing), IoError);
}

TEST(Handle, EnforceReplies) {
  GateServer s(enforce_config(), info_state());
  EXPECT_EQ(s.handle(kPublicInfo), "ALLOW");
  EXPECT_EQ(s.handle(kTaut), "BLOCK CondNotSubset");
  EXPECT_EQ(s.handle(""), "ERR empty");
  EXPECT_EQ(s.handle("SELECT '\xff' # f"), "ERR utf8");
  EXPECT_EQ(s.handle("SELECT 1"), "BLOCK NoTagPolicy");
}

TEST(Handle, CacheDoesNotChangeVerdicts) {
  GateServer cached(enforce_config(4), info_state());
  GateServer plain(enforce_config(0), info_state());
  EXPECT_FALSE(plain.cache());
  std::vector<std::string> qs{kPublicInfo, kTaut};
  for (int i = 0; i < 20; ++i) {
    qs.push_back(corpus::tagged("SELECT * FROM public_info where id > " + std::to_string(i), "get_public_info"));
  }
  for (int round = 0; round < 3; ++round) {
    for (const auto& q : qs) ASSERT_EQ(cached.handle(q), plain.handle(q));
  }
  ASSERT_TRUE(cached.cache());
  EXPECT_GT(cached.cache()->hits(), 0u);
}

TEST(Handle, ReloadSwapsStateAndCache) {
  GateServer s(enforce_config(), info_state());
  const std::string other = corpus::tagged("DELETE FROM sessions WHERE id = 1", "logout");
  EXPECT_EQ(s.handle(other), "BLOCK NoProfileEntry");
  auto st = std::make_shared<enforce::EnforcementState>(*info_state());
  auto extra = profile::build_profile({profile::record_training(other)}, st->dal).profile;
  st->profile.entries.insert(extra.entries.begin(), extra.entries.end());
  s.reload(st);
  EXPECT_EQ(s.state(), st);
  EXPECT_EQ(s.cache()->hits() + s.cache()->misses(), 0u);
  EXPECT_EQ(s.handle(other), "ALLOW");
  EXPECT_EQ(s.handle(kPublicInfo), "ALLOW");
}

TEST(Handle, EnforceNeedsState) { EXPECT_THROW(GateServer(enforce_config(), nullptr), ConfigError); }

TEST(Live, EnforceOverTcp) {
  Running r(enforce_config(), info_state());
  GateClient c("127.0.0.1", r.port());
  EXPECT_EQ(c.call(kPublicInfo), "ALLOW");
  EXPECT_EQ(c.call(kTaut), "BLOCK CondNotSubset");
  EXPECT_EQ(c.call(""), "ERR empty");
  EXPECT_EQ(c.call(std::string("SELECT \xc3\x28 # f")), "ERR utf8");
  EXPECT_EQ(c.call(kPublicInfo), "ALLOW");  // connection survives errors
}

TEST(Live, ConcurrentClientsAgree) {
  Running r(enforce_config(), info_state());
  std::vector<std::thread> ts;
  std::atomic<int> bad{0};
  for (int k = 0; k < 4; ++k) {
    ts.emplace_back([&] {
      GateClient c("127.0.0.1", r.port());
      for (int i = 0; i < 50; ++i) {
        if (c.call(kPublicInfo) != "ALLOW" || c.call(kTaut) != "BLOCK CondNotSubset") ++bad;
      }
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(bad.load(), 0);
}

TEST(Live, OversizeClosesConnection) {
  GateConfig cfg = enforce_config();
  cfg.max_frame = 256;
  Running r(cfg, info_state());
  GateClient c("127.0.0.1", r.port(), 1 << 20);
  EXPECT_EQ(c.call(std::string(257, 'x')), "ERR oversize");
  EXPECT_THROW(c.call(kPublicInfo), std::runtime_error);
  GateClient fresh("127.0.0.1", r.port());
  EXPECT_EQ(fresh.call(kPublicInfo), "ALLOW");
}

TEST(Live, TrainWritesLog) {
  TempDir t;
  GateConfig cfg;
  cfg.mode = Mode::Train;
  cfg.training_log_path = (t.path / "training.log").string();
  {
    Running r(cfg, nullptr);
    GateClient c("127.0.0.1", r.port());
    EXPECT_EQ(c.call(kPublicInfo), "OK");
    EXPECT_EQ(c.call("SELECT 1"), "ERR untagged");
    EXPECT_EQ(c.call("SELECT * FROM ( # f"), "ERR parse");
    EXPECT_EQ(c.call(kTaut), "OK");
  }
  std::vector<std::string> errs;
  auto recs = profile::parse_training_log(read_file(cfg.training_log_path), &errs);
  EXPECT_TRUE(errs.empty());
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].tagged_query, kPublicInfo);
  EXPECT_EQ(recs[1].tagged_query, kTaut);
  EXPECT_EQ(profile::format_record(recs[0]) + "\n", read_file(fs::path(SQLBLOCK_FIXTURE_DIR) / "golden" / "training.log"));
}

TEST(Live, Echo) {
  GateConfig cfg;
  cfg.mode = Mode::Echo;
  Running r(cfg, nullptr);
  GateClient c("127.0.0.1", r.port());
  EXPECT_EQ(c.call(kPublicInfo), kPublicInfo);
}

TEST(Live, BindConflict) {
  Running r(enforce_config(), info_state());
  GateConfig cfg = enforce_config();
  cfg.port = r.port();
  GateServer second(cfg, info_state());
  EXPECT_THROW(second.start(), BindError);
}

TEST(Load, DriveAndMeasure) {
  Running r(enforce_config(), info_state());
  LoadStats s = drive_load("127.0.0.1", r.port(), {kPublicInfo, kTaut}, 200, 4);
  EXPECT_EQ(s.errors, 0u);
  EXPECT_EQ(s.latency_us.size(), 200u);
  EXPECT_LE(s.percentile(50), s.percentile(99));

  OverheadResult o = measure_overhead(info_state(), {kPublicInfo, kTaut}, 200, 2, 1, 16);
  EXPECT_EQ(o.errors, 0u);
  EXPECT_GT(o.echo_seconds, 0.0);
  EXPECT_GT(o.enforce_seconds, 0.0);
}
