// Framed TCP gate: TRAIN mode records tagged queries, ENFORCE mode answers
// each with a verdict line. ECHO mode answers with the payload and exists as
// a transport baseline.
#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "sqlblock/enforcer.hpp"
#include "sqlblock/framing.hpp"

namespace sqlblock::gate {

enum class Mode { Train, Enforce, Echo };

const char* mode_name(Mode m);

struct GateConfig {
  Mode mode = Mode::Enforce;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string dal_path;
  std::string profile_path;
  std::string training_log_path;
  enforce::Policy policy;
  std::size_t max_frame = kDefaultMaxFrame;
  std::size_t verdict_cache = 4096;  // entries; 0 disables
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class BindError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// `key=value` lines; `#` comments. Keys: mode, listen, dal, profile,
// training_log, untagged, parsefail, max_frame, verdict_cache.
GateConfig parse_config(std::string_view text);
void validate(const GateConfig& cfg);

// Loads profile and access-layer files named by the config.
enforce::StatePtr load_state(const GateConfig& cfg);

// Appends records in arrival order; each record is flushed before the
// writer accepts the next one.
class TrainingLogWriter {
 public:
  explicit TrainingLogWriter(const std::string& path);
  void append(const std::string& record_text);
  std::size_t records() const;

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

// Verdict lines keyed by the exact payload bytes. Belongs to one state
// snapshot, so a reload starts from empty. Full shards evict an arbitrary
// entry.
class VerdictCache {
 public:
  static constexpr std::size_t kMaxKeyBytes = 4096;

  explicit VerdictCache(std::size_t capacity);
  bool get(std::string_view payload, std::string& out) const;
  void put(std::string_view payload, const std::string& verdict);
  std::size_t hits() const { return hits_.load(std::memory_order_relaxed); }
  std::size_t misses() const { return misses_.load(std::memory_order_relaxed); }

 private:
  static constexpr std::size_t kShards = 16;
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<std::string, std::string, Hash, std::equal_to<>> map;
  };
  Shard& shard(std::string_view key) const;

  std::size_t per_shard_;
  mutable std::array<Shard, kShards> shards_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

class GateServer {
 public:
  GateServer(GateConfig cfg, enforce::StatePtr state);
  ~GateServer();
  GateServer(const GateServer&) = delete;
  GateServer& operator=(const GateServer&) = delete;

  // Binds and listens; throws BindError. Returns the bound port.
  std::uint16_t start();
  // Accept loop; returns after stop().
  void run();
  void stop();

  void reload(enforce::StatePtr state);
  enforce::StatePtr state() const;
  std::shared_ptr<const VerdictCache> cache() const;

  // Reply to one well-formed frame payload.
  std::string handle(std::string_view payload);

  std::uint16_t port() const { return port_; }
  const GateConfig& config() const { return cfg_; }

 private:
  void serve_connection(int fd);

  GateConfig cfg_;
  mutable std::mutex state_mu_;
  enforce::StatePtr state_;
  std::shared_ptr<VerdictCache> cache_;
  std::unique_ptr<TrainingLogWriter> log_;

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};

  std::mutex conn_mu_;
  std::set<int> conns_;
  std::vector<std::thread> workers_;
};

// Blocking client for one connection.
class GateClient {
 public:
  GateClient(const std::string& host, std::uint16_t port, std::size_t max_frame = kDefaultMaxFrame);
  ~GateClient();
  GateClient(const GateClient&) = delete;
  GateClient& operator=(const GateClient&) = delete;

  // Throws std::runtime_error when the connection drops.
  std::string call(std::string_view payload);

 private:
  int fd_ = -1;
  std::size_t max_frame_;
};

struct LoadStats {
  double wall_seconds = 0;
  std::vector<double> latency_us;  // one per completed request
  std::size_t errors = 0;

  double percentile(double p) const;  // p in [0, 100]
};

// Closed loop: `concurrency` connections, each sending its share of `total`
// requests back to back, payloads taken round-robin.
LoadStats drive_load(const std::string& host, std::uint16_t port, const std::vector<std::string>& payloads,
                     std::size_t total, std::size_t concurrency);

struct OverheadResult {
  double echo_seconds = 0;     // median wall time, echo server
  double enforce_seconds = 0;  // median wall time, enforce server
  std::size_t errors = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;

  double overhead() const { return echo_seconds > 0 ? enforce_seconds / echo_seconds - 1.0 : 0.0; }
};

// Loopback comparison of an enforce server against an echo server on the
// same payloads, `trials` interleaved rounds, medians compared.
OverheadResult measure_overhead(enforce::StatePtr state, const std::vector<std::string>& payloads, std::size_t total,
                                std::size_t concurrency, std::size_t trials, std::size_t verdict_cache);

}  // namespace sqlblock::gate
