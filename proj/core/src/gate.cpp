#include "sqlblock/gate.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <charconv>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "sqlblock/io.hpp"
#include "sqlblock/sql_lexer.hpp"
#include "sqlblock/tagging.hpp"
#include "sqlblock/training.hpp"

namespace sqlblock::gate {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Train: return "train";
    case Mode::Enforce: return "enforce";
    case Mode::Echo: return "echo";
  }
  return "enforce";
}

ConfigError::ConfigError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
      line_(line) {}

namespace {

bool parse_policy(std::string_view v, int ln) {
  if (v == "allow") return true;
  if (v == "block") return false;
  throw ConfigError(ln, "expected allow or block, got '" + std::string(v) + "'");
}

template <typename T>
T parse_number(std::string_view v, int ln, const char* what) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(ln, std::string("bad ") + what);
  return out;
}

}  // namespace

GateConfig parse_config(std::string_view in) {
  GateConfig cfg;
  int ln = 0;
  for (std::string_view raw : text::split(in, '\n')) {
    ++ln;
    std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(ln, "expected key=value");
    std::string key = text::to_lower(text::trim(line.substr(0, eq)));
    std::string_view val = text::trim(line.substr(eq + 1));
    if (key == "mode") {
      if (text::iequals(val, "train")) cfg.mode = Mode::Train;
      else if (text::iequals(val, "enforce")) cfg.mode = Mode::Enforce;
      else if (text::iequals(val, "echo")) cfg.mode = Mode::Echo;
      else throw ConfigError(ln, "mode must be train, enforce or echo");
    } else if (key == "listen") {
      std::size_t colon = val.rfind(':');
      if (colon == std::string_view::npos) throw ConfigError(ln, "listen must be host:port");
      cfg.host = std::string(val.substr(0, colon));
      cfg.port = parse_number<std::uint16_t>(val.substr(colon + 1), ln, "port");
    } else if (key == "dal") {
      cfg.dal_path = std::string(val);
    } else if (key == "profile") {
      cfg.profile_path = std::string(val);
    } else if (key == "training_log") {
      cfg.training_log_path = std::string(val);
    } else if (key == "untagged") {
      cfg.policy.allow_untagged = parse_policy(val, ln);
    } else if (key == "parsefail") {
      cfg.policy.allow_parse_failure = parse_policy(val, ln);
    } else if (key == "verdict_cache") {
      cfg.verdict_cache = parse_number<std::size_t>(val, ln, "verdict_cache");
    } else if (key == "max_frame") {
      cfg.max_frame = parse_number<std::size_t>(val, ln, "max_frame");
      if (cfg.max_frame == 0 || cfg.max_frame > 0xffffffffu) throw ConfigError(ln, "max_frame out of range");
    } else {
      throw ConfigError(ln, "unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

void validate(const GateConfig& cfg) {
  if (cfg.mode == Mode::Enforce && cfg.profile_path.empty()) throw ConfigError(0, "enforce mode requires profile");
  if (cfg.mode == Mode::Train && cfg.training_log_path.empty()) {
    throw ConfigError(0, "train mode requires training_log");
  }
}

enforce::StatePtr load_state(const GateConfig& cfg) {
  auto st = std::make_shared<enforce::EnforcementState>();
  st->policy = cfg.policy;
  if (!cfg.dal_path.empty()) {
    st->dal = php::parse_dal(read_file(cfg.dal_path));
  } else {
    php::AnalyzerOptions defaults;
    st->dal.seeds.insert(defaults.seeds.begin(), defaults.seeds.end());
    st->dal.subclasses = st->dal.seeds;
  }
  if (!cfg.profile_path.empty()) st->profile = profile::parse_profile(read_file(cfg.profile_path));
  return st;
}

// ---------------------------------------------------------------------------

TrainingLogWriter::TrainingLogWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw IoError(path, "cannot open training log for append");
}

void TrainingLogWriter::append(const std::string& record_text) {
  std::lock_guard lock(mu_);
  out_ << record_text << '\n';
  out_.flush();
  ++count_;
}

std::size_t TrainingLogWriter::records() const {
  std::lock_guard lock(mu_);
  return count_;
}

// ---------------------------------------------------------------------------

VerdictCache::VerdictCache(std::size_t capacity) : per_shard_(std::max<std::size_t>(1, capacity / kShards)) {}

VerdictCache::Shard& VerdictCache::shard(std::string_view key) const {
  return shards_[(Hash{}(key) >> 7) % kShards];
}

bool VerdictCache::get(std::string_view payload, std::string& out) const {
  Shard& s = shard(payload);
  std::lock_guard lock(s.mu);
  auto it = s.map.find(payload);
  if (it == s.map.end()) {
    misses_.fetch_add(1, std::memory_order_relaxed);
    return false;
  }
  out = it->second;
  hits_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

void VerdictCache::put(std::string_view payload, const std::string& verdict) {
  if (payload.size() > kMaxKeyBytes) return;
  Shard& s = shard(payload);
  std::lock_guard lock(s.mu);
  if (s.map.size() >= per_shard_) s.map.erase(s.map.begin());
  s.map.emplace(std::string(payload), verdict);
}

// ---------------------------------------------------------------------------

GateServer::GateServer(GateConfig cfg, enforce::StatePtr state) : cfg_(std::move(cfg)), state_(std::move(state)) {
  if (cfg_.verdict_cache) cache_ = std::make_shared<VerdictCache>(cfg_.verdict_cache);
  validate(cfg_);
  if (cfg_.mode == Mode::Train) log_ = std::make_unique<TrainingLogWriter>(cfg_.training_log_path);
  if (cfg_.mode == Mode::Enforce && !state_) throw ConfigError(0, "enforce mode requires a loaded profile");
}

GateServer::~GateServer() {
  stop();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

std::uint16_t GateServer::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  std::string port = std::to_string(cfg_.port);
  int rc = ::getaddrinfo(cfg_.host.empty() ? nullptr : cfg_.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw BindError("resolve " + cfg_.host + ": " + ::gai_strerror(rc));

  std::string last_err = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_err = std::strerror(errno);
      continue;
    }
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 128) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_err = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) throw BindError("bind " + cfg_.host + ":" + port + ": " + last_err);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  else port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  return port_;
}

void GateServer::run() {
  while (!stopping_) {
    int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    if (stopping_) {
      ::close(fd);
      break;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conn_mu_);
    conns_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void GateServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::lock_guard lock(conn_mu_);
  for (int fd : conns_) ::shutdown(fd, SHUT_RDWR);
}

void GateServer::reload(enforce::StatePtr state) {
  auto fresh = cfg_.verdict_cache ? std::make_shared<VerdictCache>(cfg_.verdict_cache) : nullptr;
  std::lock_guard lock(state_mu_);
  state_ = std::move(state);
  cache_ = std::move(fresh);
}

std::shared_ptr<const VerdictCache> GateServer::cache() const {
  std::lock_guard lock(state_mu_);
  return cache_;
}

enforce::StatePtr GateServer::state() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

std::string GateServer::handle(std::string_view payload) {
  if (payload.empty()) return "ERR empty";
  if (!text::valid_utf8(payload)) return "ERR utf8";
  switch (cfg_.mode) {
    case Mode::Echo:
      return std::string(payload);
    case Mode::Enforce: {
      enforce::StatePtr st;
      std::shared_ptr<VerdictCache> cache;
      {
        std::lock_guard lock(state_mu_);
        st = state_;
        cache = cache_;
      }
      std::string line;
      if (cache && cache->get(payload, line)) return line;
      line = st->decide(payload).line();
      if (cache) cache->put(payload, line);
      return line;
    }
    case Mode::Train:
      try {
        log_->append(profile::format_record(profile::record_training(payload)));
        return "OK";
      } catch (const tag::MissingTag&) {
        return "ERR untagged";
      } catch (const tag::TagError&) {
        return "ERR tag";
      } catch (const sql::SqlError&) {
        return "ERR parse";
      } catch (const profile::MalformedRecord&) {
        return "ERR record";
      }
  }
  return "ERR mode";
}

void GateServer::serve_connection(int fd) {
  FrameDecoder dec(cfg_.max_frame);
  std::string payload;
  std::string out;
  char buf[64 * 1024];
  bool open = true;
  while (open) {
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    dec.feed(buf, static_cast<std::size_t>(n));
    out.clear();
    while (true) {
      auto st = dec.next(payload);
      if (st == FrameDecoder::Status::NeedMore) break;
      if (st == FrameDecoder::Status::Oversize) {
        out += encode_frame("ERR oversize");
        open = false;
        break;
      }
      out += encode_frame(handle(payload));
    }
    if (!out.empty() && !send_all(fd, out)) break;
  }
  {
    std::lock_guard lock(conn_mu_);
    conns_.erase(fd);
  }
  ::close(fd);
}

// ---------------------------------------------------------------------------

GateClient::GateClient(const std::string& host, std::uint16_t port, std::size_t max_frame) : max_frame_(max_frame) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string p = std::to_string(port);
  int rc = ::getaddrinfo(host.c_str(), p.c_str(), &hints, &res);
  if (rc != 0) throw std::runtime_error("resolve " + host + ": " + ::gai_strerror(rc));
  std::string err = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    err = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw std::runtime_error("connect " + host + ":" + p + ": " + err);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

GateClient::~GateClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::string GateClient::call(std::string_view payload) {
  if (!send_frame(fd_, payload)) throw std::runtime_error("send failed");
  std::string reply;
  if (!recv_frame(fd_, reply, max_frame_)) throw std::runtime_error("connection closed");
  return reply;
}

double LoadStats::percentile(double p) const {
  if (latency_us.empty()) return 0;
  std::vector<double> v = latency_us;
  std::size_t k = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  k = std::clamp<std::size_t>(k, 1, v.size()) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

LoadStats drive_load(const std::string& host, std::uint16_t port, const std::vector<std::string>& payloads,
                     std::size_t total, std::size_t concurrency) {
  LoadStats stats;
  if (payloads.empty() || total == 0) return stats;
  concurrency = std::max<std::size_t>(1, std::min(concurrency, total));
  std::vector<std::unique_ptr<GateClient>> clients;
  for (std::size_t i = 0; i < concurrency; ++i) clients.push_back(std::make_unique<GateClient>(host, port));

  std::vector<std::vector<double>> lat(concurrency);
  std::vector<std::size_t> errs(concurrency, 0);
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  std::vector<std::thread> threads;
  for (std::size_t c = 0; c < concurrency; ++c) {
    threads.emplace_back([&, c] {
      std::size_t share = total / concurrency + (c < total % concurrency ? 1 : 0);
      lat[c].reserve(share);
      for (std::size_t i = 0; i < share; ++i) {
        const std::string& q = payloads[(c + i * concurrency) % payloads.size()];
        auto s = clock::now();
        try {
          clients[c]->call(q);
        } catch (const std::exception&) {
          errs[c] += share - i;
          return;
        }
        lat[c].push_back(std::chrono::duration<double, std::micro>(clock::now() - s).count());
      }
    });
  }
  for (auto& t : threads) t.join();
  stats.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  for (std::size_t c = 0; c < concurrency; ++c) {
    stats.latency_us.insert(stats.latency_us.end(), lat[c].begin(), lat[c].end());
    stats.errors += errs[c];
  }
  return stats;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

OverheadResult measure_overhead(enforce::StatePtr state, const std::vector<std::string>& payloads, std::size_t total,
                                std::size_t concurrency, std::size_t trials, std::size_t verdict_cache) {
  OverheadResult out;
  std::vector<double> echo, enforce;
  auto round = [&](Mode mode) {
    GateConfig cfg;
    cfg.mode = mode;
    cfg.profile_path = "-";
    cfg.verdict_cache = verdict_cache;
    GateServer srv(cfg, state);
    std::uint16_t port = srv.start();
    std::thread loop([&] { srv.run(); });
    LoadStats st = drive_load(cfg.host, port, payloads, total, concurrency);
    if (auto c = srv.cache()) {
      out.cache_hits += c->hits();
      out.cache_misses += c->misses();
    }
    srv.stop();
    loop.join();
    out.errors += st.errors;
    return st.wall_seconds;
  };
  for (std::size_t i = 0; i < std::max<std::size_t>(1, trials); ++i) {
    echo.push_back(round(Mode::Echo));
    enforce.push_back(round(Mode::Enforce));
  }
  out.echo_seconds = median(echo);
  out.enforce_seconds = median(enforce);
  return out;
}

}  // namespace sqlblock::gate
