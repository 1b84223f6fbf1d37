#include <httplib.h>

#include "polyboost/gateway.hpp"

namespace polyboost {

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading slash, "/" when absent
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint must be an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport : public Transport {
 public:
  WireResult post_json(const std::string& endpoint, const std::string& body,
                       const std::string& bearer_token,
                       std::chrono::milliseconds timeout) override {
    const SplitUrl url = split_url(endpoint);
    // One client per request: httplib clients are not safe for concurrent
    // calls, and request volume here is model-bound, not connection-bound.
    httplib::Client client(url.base);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers headers;
    if (!bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    const httplib::Result result = client.Post(url.path, headers, body, "application/json");
    if (!result) {
      return WireResult{true, 0, {}, httplib::to_string(result.error())};
    }
    return WireResult{false, result->status, result->body, {}};
  }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() {
  return std::make_unique<HttpTransport>();
}

}  // namespace polyboost
