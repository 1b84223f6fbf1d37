#include <doctest.h>

#include <random>
#include <set>

#include "polyboost/gateway.hpp"
#include "polyboost/parallel.hpp"
#include "support/mock_transport.hpp"
#include "support/tmpdir.hpp"

using namespace polyboost;
using namespace polyboost::testing;

namespace {

BackendConfig test_config() {
  BackendConfig config;
  config.endpoint = "http://mock.local/v1/chat/completions";
  config.model_id = "booster-1";
  config.temperature = 0.0;
  config.max_tokens = 256;
  config.max_retries = 3;
  return config;
}

std::vector<ChatMessage> hello_messages() {
  return {user_message("hello")};
}

std::string echo_handler_text(const nlohmann::json& body) {
  return request_messages(body).back().second;
}

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("cache_key is deterministic") {
  const auto config = test_config();
  const auto messages = hello_messages();
  CHECK(cache_key(config, messages) == cache_key(config, messages));
  CHECK(cache_key(config, messages).size() == 64);  // SHA-256 hex
}

TEST_CASE("cache_key tracks every request-affecting field and nothing else") {
  // Mirror of BackendConfig; a size change here means a field was added or
  // removed and this enumeration must be revisited.
  struct BackendConfigMirror {
    std::string endpoint;
    std::string model_id;
    double temperature;
    std::size_t max_tokens;
    std::size_t beam_width;
    bool send_beam_width;
    std::chrono::milliseconds timeout;
    std::size_t max_retries;
    std::size_t parallelism;
  };
  static_assert(sizeof(BackendConfigMirror) == sizeof(BackendConfig));

  const auto base_config = test_config();
  const auto messages = hello_messages();
  const auto base_key = cache_key(base_config, messages);

  const auto perturbed = [&](auto&& mutate) {
    BackendConfig config = base_config;
    mutate(config);
    return cache_key(config, messages);
  };

  // Request-affecting fields change the key.
  CHECK(perturbed([](BackendConfig& c) { c.endpoint += "/other"; }) != base_key);
  CHECK(perturbed([](BackendConfig& c) { c.model_id = "other"; }) != base_key);
  CHECK(perturbed([](BackendConfig& c) { c.temperature = 0.7; }) != base_key);
  CHECK(perturbed([](BackendConfig& c) { c.max_tokens = 999; }) != base_key);
  CHECK(perturbed([](BackendConfig& c) { c.send_beam_width = true; }) != base_key);
  {
    BackendConfig beams = base_config;
    beams.send_beam_width = true;
    const auto with_one = cache_key(beams, messages);
    beams.beam_width = 4;
    CHECK(cache_key(beams, messages) != with_one);
  }

  // Delivery-only fields do not.
  CHECK(perturbed([](BackendConfig& c) { c.timeout = std::chrono::milliseconds(1); }) == base_key);
  CHECK(perturbed([](BackendConfig& c) { c.max_retries = 9; }) == base_key);
  CHECK(perturbed([](BackendConfig& c) { c.parallelism = 9; }) == base_key);
  // beam_width is inert while the backend does not receive it.
  CHECK(perturbed([](BackendConfig& c) { c.beam_width = 4; }) == base_key);

  // Messages always matter.
  CHECK(cache_key(base_config, {user_message("other")}) != base_key);
  CHECK(cache_key(base_config, {system_message("hello")}) != base_key);
}

TEST_CASE("complete returns the assistant text") {
  MockGateway mock(echo_handler_text);
  CHECK(mock.gateway.complete(test_config(), hello_messages()) == "hello");
  CHECK(mock.transport->calls() == 1);
}

TEST_CASE("complete sends the documented wire shape") {
  MockGateway mock(echo_handler_text);
  auto config = test_config();
  config.temperature = 0.5;
  mock.gateway.set_api_key("secret-token");
  mock.gateway.complete(config, {system_message("sys"), user_message("hi")});

  const auto log = mock.transport->request_log();
  REQUIRE(log.size() == 1);
  const auto& body = log[0];
  CHECK(body.at("model") == "booster-1");
  CHECK(body.at("temperature") == 0.5);
  CHECK(body.at("max_tokens") == 256);
  CHECK_FALSE(body.contains("beam_width"));
  const auto messages = request_messages(body);
  REQUIRE(messages.size() == 2);
  CHECK(messages[0] == std::pair<std::string, std::string>{"system", "sys"});
  CHECK(messages[1] == std::pair<std::string, std::string>{"user", "hi"});
  CHECK(mock.transport->last_bearer_token() == "secret-token");
  CHECK(mock.transport->last_endpoint() == config.endpoint);
}

TEST_CASE("beam width is transmitted only when advertised") {
  MockGateway mock(echo_handler_text);
  auto config = test_config();
  config.beam_width = 2;
  mock.gateway.complete(config, hello_messages());
  CHECK_FALSE(mock.transport->request_log()[0].contains("beam_width"));

  config.send_beam_width = true;
  mock.gateway.complete(config, hello_messages());
  CHECK(mock.transport->request_log()[1].at("beam_width") == 2);
}

TEST_CASE("transient failures retry and then succeed") {
  MockGateway mock(echo_handler_text);
  mock.transport->fail_next(2);  // two timeouts, then success
  auto config = test_config();
  config.max_retries = 3;
  CHECK(mock.gateway.complete(config, hello_messages()) == "hello");
  CHECK(mock.transport->calls() == 3);
  CHECK(mock.gateway.stats().network_calls == 3);
}

TEST_CASE("exhausted retries raise TransportError") {
  MockGateway mock(echo_handler_text);
  mock.transport->fail_next(100);
  auto config = test_config();
  config.max_retries = 2;
  CHECK_THROWS_AS(mock.gateway.complete(config, hello_messages()), TransportError);
  CHECK(mock.transport->calls() == 3);  // 1 initial + 2 retries
}

TEST_CASE("retryable statuses back off like timeouts") {
  MockGateway mock(echo_handler_text);
  mock.transport->fail_next(2, 503);
  auto config = test_config();
  CHECK(mock.gateway.complete(config, hello_messages()) == "hello");
  CHECK(mock.transport->calls() == 3);

  mock.transport->fail_next(1, 429);
  CHECK(mock.gateway.complete(config, hello_messages()) == "hello");
}

TEST_CASE("non-retryable statuses raise BackendError immediately") {
  MockGateway mock(echo_handler_text);
  mock.transport->fail_next(1, 400);
  const auto before = mock.transport->calls();
  try {
    mock.gateway.complete(test_config(), hello_messages());
    FAIL("expected BackendError");
  } catch (const BackendError& error) {
    CHECK(error.status() == 400);
    CHECK(error.body_excerpt() == "overloaded");
  }
  CHECK(mock.transport->calls() == before + 1);
}

TEST_CASE("backoff delays follow 1s base, doubling, 20% jitter") {
  auto transport = std::make_unique<ScriptedTransport>(echo_handler_text);
  transport->fail_next(3);
  Gateway gateway(std::move(transport));
  std::vector<std::chrono::milliseconds> delays;
  gateway.set_sleep_fn([&](std::chrono::milliseconds d) { delays.push_back(d); });
  gateway.complete(test_config(), hello_messages());
  REQUIRE(delays.size() == 3);
  CHECK(delays[0].count() >= 800);
  CHECK(delays[0].count() <= 1200);
  CHECK(delays[1].count() >= 1600);
  CHECK(delays[1].count() <= 2400);
  CHECK(delays[2].count() >= 3200);
  CHECK(delays[2].count() <= 4800);
}

TEST_CASE("empty or blank messages are rejected") {
  MockGateway mock(echo_handler_text);
  CHECK_THROWS_AS(mock.gateway.complete(test_config(), {}), ValidationError);
  CHECK_THROWS_AS(mock.gateway.complete(test_config(), {user_message("  ")}), ValidationError);
  // Assistant turns may be empty (failed-reply retries replay them).
  CHECK_NOTHROW(mock.gateway.complete(
      test_config(), {user_message("x"), assistant_message(""), user_message("y")}));
}

TEST_CASE("malformed response bodies raise BackendError") {
  class BadBodyTransport : public Transport {
   public:
    WireResult post_json(const std::string&, const std::string&, const std::string&,
                         std::chrono::milliseconds) override {
      return WireResult{false, 200, "not json", {}};
    }
  };
  Gateway gateway(std::make_unique<BadBodyTransport>());
  gateway.set_sleep_fn([](std::chrono::milliseconds) {});
  CHECK_THROWS_AS(gateway.complete(test_config(), hello_messages()), BackendError);
}

TEST_CASE("cached_complete: miss then hit with a single network call") {
  MockGateway mock(echo_handler_text);
  ResponseCache cache;
  const auto config = test_config();

  const auto first = mock.gateway.cached_complete(config, hello_messages(), cache);
  CHECK_FALSE(first.hit);
  CHECK(first.text == "hello");
  const auto second = mock.gateway.cached_complete(config, hello_messages(), cache);
  CHECK(second.hit);
  CHECK(second.text == "hello");
  CHECK(second.created_at == first.created_at);
  CHECK(mock.transport->calls() == 1);

  const auto stats = mock.gateway.stats();
  CHECK(stats.cache_hits == 1);
  CHECK(stats.cache_misses == 1);
  CHECK(stats.requests == 2);
}

TEST_CASE("a different model id misses the cache") {
  MockGateway mock(echo_handler_text);
  ResponseCache cache;
  auto config = test_config();
  mock.gateway.cached_complete(config, hello_messages(), cache);
  config.model_id = "other-model";
  const auto other = mock.gateway.cached_complete(config, hello_messages(), cache);
  CHECK_FALSE(other.hit);
  CHECK(mock.transport->calls() == 2);
}

TEST_CASE("refresh_complete bypasses the cache read but stores the result") {
  MockGateway mock(echo_handler_text);
  ResponseCache cache;
  const auto config = test_config();
  mock.gateway.cached_complete(config, hello_messages(), cache);
  const auto refreshed = mock.gateway.refresh_complete(config, hello_messages(), cache);
  CHECK_FALSE(refreshed.hit);
  CHECK(mock.transport->calls() == 2);
  CHECK(cache.size() == 1);  // same key, latest wins
}

TEST_CASE("persistent cache survives reopening") {
  TempDir dir;
  const auto file = dir.file("responses.jsonl");
  {
    MockGateway mock(echo_handler_text);
    ResponseCache cache(file);
    mock.gateway.cached_complete(test_config(), hello_messages(), cache);
  }
  MockGateway mock(echo_handler_text);
  ResponseCache reopened(file);
  CHECK(reopened.size() == 1);
  const auto result = mock.gateway.cached_complete(test_config(), hello_messages(), reopened);
  CHECK(result.hit);
  CHECK(mock.transport->calls() == 0);
}

TEST_CASE("corrupted cache lines are skipped and rewritten on the next miss") {
  TempDir dir;
  const auto file = dir.file("responses.jsonl");
  MockGateway first(echo_handler_text);
  {
    ResponseCache cache(file);
    first.gateway.cached_complete(test_config(), hello_messages(), cache);
  }
  // Corrupt the stored line.
  const std::string original = read_file(file);
  dir.write("responses.jsonl", "{corrupted\n");

  MockGateway second(echo_handler_text);
  ResponseCache cache(file);
  CHECK(cache.size() == 0);
  const auto result = second.gateway.cached_complete(test_config(), hello_messages(), cache);
  CHECK_FALSE(result.hit);  // treated as a miss
  CHECK(second.transport->calls() == 1);

  // The line was rewritten: a fresh open sees the entry again.
  ResponseCache reopened(file);
  CHECK(reopened.size() == 1);
}

TEST_CASE("parallel_map keeps output order equal to input order") {
  std::mt19937_64 rng(79);
  std::vector<int> jitter(64);
  for (auto& j : jitter) j = static_cast<int>(rng() % 3);
  const auto results = parallel_map<std::size_t>(64, 8, [&](std::size_t i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(jitter[i]));
    return i * 10;
  });
  for (std::size_t i = 0; i < results.size(); ++i) CHECK(results[i] == i * 10);
}

TEST_CASE("backend config json round-trip and validation") {
  const auto parsed = backend_config_from_json(nlohmann::json{
      {"endpoint", "http://localhost:9999/v1/chat/completions"},
      {"model", "judge-1"},
      {"temperature", 0.0},
      {"max_tokens", 512},
      {"timeout_ms", 5000},
      {"max_retries", 1},
      {"parallelism", 4},
  });
  CHECK(parsed.model_id == "judge-1");
  CHECK(parsed.parallelism == 4);
  CHECK(parsed.timeout == std::chrono::milliseconds(5000));
  const auto round_tripped = backend_config_from_json(backend_config_to_json(parsed));
  CHECK(round_tripped.endpoint == parsed.endpoint);
  CHECK(round_tripped.beam_width == parsed.beam_width);

  CHECK_THROWS_AS(backend_config_from_json(nlohmann::json{{"model", "x"}}), ValidationError);
  CHECK_THROWS_AS(backend_config_from_json(nlohmann::json{
                      {"endpoint", "e"}, {"model", "m"}, {"parallelism", 0}}),
                  ValidationError);
}

}  // TEST_SUITE
