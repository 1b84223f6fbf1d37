#pragma once

// An in-process HTTP backend speaking the chat-completion wire shape, used by
// end-to-end tests that drive the real transport. Behavior is routed by
// prompt shape: pairwise judging requests get a longer-answer verdict,
// entity-matching requests get a substring check, anything else is treated as
// a booster request and the rendered record is echoed back improved.

#include <atomic>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mock_transport.hpp"

namespace polyboost::testing {

class MockModelServer {
 public:
  MockModelServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& request,
                                                httplib::Response& response) {
      requests_.fetch_add(1);
      const auto body = nlohmann::json::parse(request.body);
      response.set_content(chat_response_body(answer(body)), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockModelServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

  std::size_t requests() const { return requests_.load(); }

 private:
  static std::string answer(const nlohmann::json& body) {
    const auto messages = request_messages(body);
    if (messages.front().first == "system") {
      const std::string& system_text = messages.front().second;
      if (system_text.rfind("Please act as an impartial judge", 0) == 0) {
        return longer_answer_judge_handler(body);
      }
      if (system_text.rfind("Check whether an entity", 0) == 0) {
        return entity_contains_handler(body);
      }
    }
    // Booster: echo the rendered record with an appended improvement.
    const std::string& content = messages.back().second;
    const auto at = content.find("<|instruction|>");
    if (at == std::string::npos) return content;
    return content.substr(at) + "!";
  }

  static std::string entity_contains_handler(const nlohmann::json& body) {
    const std::string statement_label = "[Given statement]\n";
    const std::string collection_label = "\n\n[Given collection]\n";
    for (const auto& [role, content] : request_messages(body)) {
      const auto label_at = content.find(statement_label);
      if (label_at == std::string::npos) continue;
      const auto statement_at = label_at + statement_label.size();
      const auto collection_at = content.find(collection_label);
      const std::string statement = content.substr(statement_at, collection_at - statement_at);
      const auto entities =
          nlohmann::json::parse(content.substr(collection_at + collection_label.size()));
      for (const auto& entity : entities) {
        if (statement.find(entity.get<std::string>()) != std::string::npos) return "Yes";
      }
      return "No";
    }
    return "No";
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace polyboost::testing
