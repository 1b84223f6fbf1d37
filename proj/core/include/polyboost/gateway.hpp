#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "polyboost/errors.hpp"

namespace polyboost {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline ChatMessage system_message(std::string content) {
  return {ChatRole::System, std::move(content)};
}
inline ChatMessage user_message(std::string content) {
  return {ChatRole::User, std::move(content)};
}
inline ChatMessage assistant_message(std::string content) {
  return {ChatRole::Assistant, std::move(content)};
}

/// Connection settings for one model backend. `timeout`, `max_retries` and
/// `parallelism` shape delivery only; every other field shapes the request
/// itself and therefore participates in the cache key.
struct BackendConfig {
  std::string endpoint;  // full URL of the chat-completion route
  std::string model_id;
  double temperature = 0.0;
  std::size_t max_tokens = 1024;
  std::size_t beam_width = 1;
  // Most chat endpoints reject unknown fields, so beam_width is transmitted
  // only when the backend is known to accept it.
  bool send_beam_width = false;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_retries = 3;
  std::size_t parallelism = 1;
};

void validate_backend_config(const BackendConfig& config);
BackendConfig backend_config_from_json(const nlohmann::json& object);
nlohmann::ordered_json backend_config_to_json(const BackendConfig& config);

/// Outcome of one wire-level POST. `transport_failed` covers timeouts and
/// connection errors; otherwise `status` and `body` hold the HTTP response.
struct WireResult {
  bool transport_failed = false;
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual WireResult post_json(const std::string& endpoint, const std::string& body,
                               const std::string& bearer_token,
                               std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<Transport> make_http_transport();

struct CacheEntry {
  std::string key;  // hex digest of the canonical request serialization
  std::string request_summary;
  std::string response_text;
  std::string created_at;  // ISO-8601 UTC

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

/// Canonical serialization of every request-affecting field. beam_width is
/// recorded as transmitted (null when the backend does not receive it).
std::string canonical_request_summary(const BackendConfig& config,
                                      const std::vector<ChatMessage>& messages);

/// Hex digest (SHA-256) of the canonical request serialization. Insensitive
/// to timeout, retry, and parallelism settings.
std::string cache_key(const BackendConfig& config, const std::vector<ChatMessage>& messages);

/// Persistent response cache: an append-only JSON-lines file plus an
/// in-memory index. Corrupted lines are skipped on load and rewritten by the
/// next miss; for duplicate keys the last appended line wins. Safe for
/// concurrent readers; appends are serialized.
class ResponseCache {
 public:
  /// In-memory cache with no backing file.
  ResponseCache() = default;

  /// Opens (or creates) a file-backed cache.
  explicit ResponseCache(std::filesystem::path file);

  std::optional<CacheEntry> lookup(const std::string& key) const;

  /// Inserts and appends to the backing file. A failed append degrades to a
  /// warning on stderr; the entry stays usable in memory.
  void store(CacheEntry entry);

  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::filesystem::path file_;
  bool persistent_ = false;
  std::unordered_map<std::string, CacheEntry> entries_;
};

struct GatewayStats {
  std::size_t requests = 0;       // logical complete() calls
  std::size_t network_calls = 0;  // transport posts, retries included
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
};

struct CachedCompletion {
  std::string text;
  bool hit = false;
  std::string created_at;  // creation time of the cache entry that served this
};

/// Single wire-level client for all model calls: request construction,
/// retries with exponential backoff, and cache consultation. Safe for
/// concurrent invocation; callers bound their own fan-out with
/// BackendConfig::parallelism (see parallel_map).
class Gateway {
 public:
  explicit Gateway(std::unique_ptr<Transport> transport = make_http_transport());

  /// Sends one chat request and returns the assistant text. Retries timeouts
  /// and 429/5xx statuses up to config.max_retries with exponential backoff
  /// (1s base, x2 per attempt, +/-20% jitter). Throws TransportError when
  /// retries are exhausted and BackendError on non-retryable statuses.
  std::string complete(const BackendConfig& config, const std::vector<ChatMessage>& messages);

  /// complete() behind the response cache.
  CachedCompletion cached_complete(const BackendConfig& config,
                                   const std::vector<ChatMessage>& messages, ResponseCache& cache);

  /// Like cached_complete, but never reads the cache (the fresh response is
  /// still stored). Used for one-shot re-asks after unusable replies.
  CachedCompletion refresh_complete(const BackendConfig& config,
                                    const std::vector<ChatMessage>& messages,
                                    ResponseCache& cache);

  GatewayStats stats() const;

  /// Bearer token for the Authorization header. Defaults to the
  /// LLM_GATEWAY_API_KEY environment variable.
  void set_api_key(std::string key);

  /// Replaces the backoff sleep (tests use a recording no-op).
  void set_sleep_fn(std::function<void(std::chrono::milliseconds)> sleep_fn);

 private:
  CachedCompletion complete_and_store(const BackendConfig& config,
                                      const std::vector<ChatMessage>& messages,
                                      ResponseCache& cache, const std::string& key);

  std::unique_ptr<Transport> transport_;
  std::string api_key_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  mutable std::mutex mutex_;  // guards stats_ and jitter_rng_
  GatewayStats stats_;
  std::mt19937_64 jitter_rng_;
};

/// Current UTC time as ISO-8601 (e.g. "2026-01-31T09:15:00Z").
std::string utc_now_iso8601();

}  // namespace polyboost
