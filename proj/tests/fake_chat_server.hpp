#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "schemaref/llm_client.hpp"

namespace schemaref::testing {

/// OpenAI-style /v1/chat/completions stub on a random local port. The
/// responder sees the parsed request body and returns the reply content.
class FakeChatServer {
public:
  using Responder = std::function<std::string(const nlohmann::json& request)>;

  explicit FakeChatServer(Responder responder, int status = 200) : responder_(std::move(responder)), status_(status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      auto body = nlohmann::json::parse(req.body);
      last_authorization_ = req.get_header_value("Authorization");
      if (status_ != 200) {
        res.status = status_;
        return;
      }
      nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", responder_(body)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeChatServer() {
    server_.stop();
    thread_.join();
  }

  ChatEndpoint endpoint() const {
    ChatEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    e.model = "stub";
    e.timeout = std::chrono::milliseconds(5000);
    e.max_retries = 0;
    return e;
  }
  int requests() const { return requests_; }
  std::string last_authorization() const { return last_authorization_; }

private:
  Responder responder_;
  int status_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  std::string last_authorization_;
};

}  // namespace schemaref::testing
