#include "polyboost/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <thread>

#include <openssl/evp.h>

#include "polyboost/text.hpp"

namespace polyboost {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::chrono::milliseconds kBackoffBase{1000};
constexpr std::chrono::milliseconds kBackoffCap{60000};

std::string sha256_hex(std::string_view payload) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0x0F]);
  }
  return hex;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

std::string body_excerpt(const std::string& body) {
  return body.size() <= 300 ? body : body.substr(0, 300) + "...";
}

std::string extract_assistant_text(const std::string& body, int status) {
  json payload = json::parse(body, nullptr, false);
  if (payload.is_discarded()) {
    throw BackendError(status, "response is not JSON: " + body_excerpt(body));
  }
  if (!payload.contains("choices") || !payload["choices"].is_array() ||
      payload["choices"].empty()) {
    throw BackendError(status, "response has no choices: " + body_excerpt(body));
  }
  const auto& message = payload["choices"][0];
  if (!message.contains("message") || !message["message"].contains("content") ||
      !message["message"]["content"].is_string()) {
    throw BackendError(status, "response has no message content: " + body_excerpt(body));
  }
  return message["message"]["content"].get<std::string>();
}

}  // namespace

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::System:
      return "system";
    case ChatRole::User:
      return "user";
    case ChatRole::Assistant:
      return "assistant";
  }
  return "unknown";
}

void validate_backend_config(const BackendConfig& config) {
  if (config.endpoint.empty()) throw ValidationError("backend endpoint must be set");
  if (config.model_id.empty()) throw ValidationError("backend model must be set");
  if (config.temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (config.beam_width < 1) throw ValidationError("beam_width must be >= 1");
  if (config.parallelism < 1) throw ValidationError("parallelism must be >= 1");
}

BackendConfig backend_config_from_json(const json& object) {
  if (!object.is_object()) throw ValidationError("backend config must be a JSON object");
  BackendConfig config;
  const auto read_string = [&](const char* key, std::string& target, bool required) {
    if (!object.contains(key)) {
      if (required) throw ValidationError(std::string("backend config: missing field ") + key);
      return;
    }
    if (!object.at(key).is_string()) {
      throw ValidationError(std::string("backend config: field ") + key + " must be a string");
    }
    target = object.at(key).get<std::string>();
  };
  read_string("endpoint", config.endpoint, true);
  read_string("model", config.model_id, true);
  if (object.contains("temperature")) config.temperature = object.at("temperature").get<double>();
  if (object.contains("max_tokens")) config.max_tokens = object.at("max_tokens").get<std::size_t>();
  if (object.contains("beam_width")) config.beam_width = object.at("beam_width").get<std::size_t>();
  if (object.contains("send_beam_width")) {
    config.send_beam_width = object.at("send_beam_width").get<bool>();
  }
  if (object.contains("timeout_ms")) {
    config.timeout = std::chrono::milliseconds(object.at("timeout_ms").get<std::int64_t>());
  }
  if (object.contains("max_retries")) {
    config.max_retries = object.at("max_retries").get<std::size_t>();
  }
  if (object.contains("parallelism")) {
    config.parallelism = object.at("parallelism").get<std::size_t>();
  }
  validate_backend_config(config);
  return config;
}

ordered_json backend_config_to_json(const BackendConfig& config) {
  return ordered_json{
      {"endpoint", config.endpoint},
      {"model", config.model_id},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens},
      {"beam_width", config.beam_width},
      {"send_beam_width", config.send_beam_width},
      {"timeout_ms", config.timeout.count()},
      {"max_retries", config.max_retries},
      {"parallelism", config.parallelism},
  };
}

std::string canonical_request_summary(const BackendConfig& config,
                                      const std::vector<ChatMessage>& messages) {
  ordered_json rendered_messages = ordered_json::array();
  for (const auto& message : messages) {
    rendered_messages.push_back(
        ordered_json{{"role", to_string(message.role)}, {"content", message.content}});
  }
  ordered_json summary{
      {"endpoint", config.endpoint},
      {"model", config.model_id},
      {"messages", std::move(rendered_messages)},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens},
      {"beam_width", config.send_beam_width ? ordered_json(config.beam_width) : ordered_json()},
  };
  return summary.dump();
}

std::string cache_key(const BackendConfig& config, const std::vector<ChatMessage>& messages) {
  return sha256_hex(canonical_request_summary(config, messages));
}

ResponseCache::ResponseCache(std::filesystem::path file)
    : file_(std::move(file)), persistent_(true) {
  if (const auto parent = file_.parent_path(); !parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ifstream in(file_, std::ios::binary);
  if (!in) return;  // fresh cache
  std::string text;
  while (std::getline(in, text)) {
    if (blank(text)) continue;
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded() || !value.is_object()) continue;  // corrupted line: miss
    if (!value.contains("key") || !value["key"].is_string() || !value.contains("response") ||
        !value["response"].is_string()) {
      continue;
    }
    CacheEntry entry;
    entry.key = value["key"].get<std::string>();
    entry.response_text = value["response"].get<std::string>();
    if (value.contains("request") && value["request"].is_string()) {
      entry.request_summary = value["request"].get<std::string>();
    }
    if (value.contains("created_at") && value["created_at"].is_string()) {
      entry.created_at = value["created_at"].get<std::string>();
    }
    entries_[entry.key] = std::move(entry);  // last line wins
  }
}

std::optional<CacheEntry> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(CacheEntry entry) {
  std::lock_guard lock(mutex_);
  if (persistent_) {
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    ordered_json line{
        {"key", entry.key},
        {"request", entry.request_summary},
        {"response", entry.response_text},
        {"created_at", entry.created_at},
    };
    out << line.dump() << '\n';
    if (!out) {
      std::cerr << "warning: cache append failed for " << file_.string() << "\n";
    }
  }
  entries_[entry.key] = std::move(entry);
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

Gateway::Gateway(std::unique_ptr<Transport> transport)
    : transport_(std::move(transport)),
      sleep_([](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); }),
      jitter_rng_(std::random_device{}()) {
  if (const char* key = std::getenv("LLM_GATEWAY_API_KEY")) api_key_ = key;
}

void Gateway::set_api_key(std::string key) {
  api_key_ = std::move(key);
}

void Gateway::set_sleep_fn(std::function<void(std::chrono::milliseconds)> sleep_fn) {
  sleep_ = std::move(sleep_fn);
}

std::string Gateway::complete(const BackendConfig& config,
                              const std::vector<ChatMessage>& messages) {
  validate_backend_config(config);
  if (messages.empty()) throw ValidationError("request must carry at least one message");
  for (const auto& message : messages) {
    if (message.role != ChatRole::Assistant && blank(message.content)) {
      throw ValidationError("user and system messages must be non-empty");
    }
  }

  ordered_json rendered_messages = ordered_json::array();
  for (const auto& message : messages) {
    rendered_messages.push_back(
        ordered_json{{"role", to_string(message.role)}, {"content", message.content}});
  }
  ordered_json body{
      {"model", config.model_id},
      {"messages", std::move(rendered_messages)},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens},
  };
  if (config.send_beam_width) body["beam_width"] = config.beam_width;
  const std::string payload = body.dump();

  {
    std::lock_guard lock(mutex_);
    ++stats_.requests;
  }

  std::string last_failure;
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      double jitter;
      {
        std::lock_guard lock(mutex_);
        jitter = 0.8 + 0.4 * std::uniform_real_distribution<double>(0.0, 1.0)(jitter_rng_);
      }
      const double scale = std::pow(2.0, static_cast<double>(attempt - 1));
      const double delay_ms = std::min(static_cast<double>(kBackoffBase.count()) * scale,
                                       static_cast<double>(kBackoffCap.count()));
      sleep_(std::chrono::milliseconds(static_cast<std::int64_t>(delay_ms * jitter)));
    }
    {
      std::lock_guard lock(mutex_);
      ++stats_.network_calls;
    }
    const WireResult wire = transport_->post_json(config.endpoint, payload, api_key_,
                                                  config.timeout);
    if (wire.transport_failed) {
      last_failure = wire.error.empty() ? "transport failure" : wire.error;
      continue;
    }
    if (wire.status >= 200 && wire.status < 300) {
      return extract_assistant_text(wire.body, wire.status);
    }
    if (retryable_status(wire.status)) {
      last_failure = "status " + std::to_string(wire.status);
      continue;
    }
    throw BackendError(wire.status, body_excerpt(wire.body));
  }
  throw TransportError("request to " + config.endpoint + " failed after " +
                       std::to_string(config.max_retries + 1) + " attempts: " + last_failure);
}

CachedCompletion Gateway::complete_and_store(const BackendConfig& config,
                                             const std::vector<ChatMessage>& messages,
                                             ResponseCache& cache, const std::string& key) {
  CachedCompletion result;
  result.text = complete(config, messages);
  result.hit = false;
  result.created_at = utc_now_iso8601();
  cache.store(CacheEntry{key, canonical_request_summary(config, messages), result.text,
                         result.created_at});
  return result;
}

CachedCompletion Gateway::cached_complete(const BackendConfig& config,
                                          const std::vector<ChatMessage>& messages,
                                          ResponseCache& cache) {
  const std::string key = cache_key(config, messages);
  if (auto entry = cache.lookup(key)) {
    std::lock_guard lock(mutex_);
    ++stats_.requests;
    ++stats_.cache_hits;
    return CachedCompletion{entry->response_text, true, entry->created_at};
  }
  {
    std::lock_guard lock(mutex_);
    ++stats_.cache_misses;
  }
  return complete_and_store(config, messages, cache, key);
}

CachedCompletion Gateway::refresh_complete(const BackendConfig& config,
                                           const std::vector<ChatMessage>& messages,
                                           ResponseCache& cache) {
  {
    std::lock_guard lock(mutex_);
    ++stats_.cache_misses;
  }
  return complete_and_store(config, messages, cache, cache_key(config, messages));
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

}  // namespace polyboost
