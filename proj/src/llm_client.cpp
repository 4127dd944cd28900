#include "schemaref/llm_client.hpp"

#include <cstdlib>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "schemaref/identifier.hpp"

namespace schemaref {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  SplitUrl out;
  out.origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ChatReply chat_complete(const ChatEndpoint& endpoint, const std::vector<ChatMessage>& messages) {
  ChatReply reply;
  if (endpoint.base_url.empty()) {
    reply.error = "no endpoint configured";
    return reply;
  }
  const auto url = split_url(endpoint.base_url);
  json body = {{"model", endpoint.model}, {"temperature", endpoint.temperature}, {"messages", json::array()}};
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty())
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);

  const int attempts = std::max(1, endpoint.max_retries + 1);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      httplib::Client client(url.origin);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      auto res = client.Post(url.path + "/chat/completions", headers, body.dump(), "application/json");
      if (!res) {
        reply.error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        reply.error = "HTTP " + std::to_string(res->status);
        continue;
      }
      auto parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
        reply.error = "malformed response";
        continue;
      }
      const auto& msg = parsed["choices"][0]["message"];
      if (!msg.contains("content") || !msg["content"].is_string()) {
        reply.error = "response without content";
        continue;
      }
      reply.content = msg["content"].get<std::string>();
      reply.error.clear();
      return reply;
    } catch (const std::exception& e) {
      reply.error = e.what();
    }
  }
  return reply;
}

std::string extract_sql(const std::string& response) {
  const auto fence = response.find("```");
  if (fence != std::string::npos) {
    auto body_start = response.find('\n', fence);
    if (body_start != std::string::npos) {
      ++body_start;
      const auto close = response.find("```", body_start);
      return trim(response.substr(body_start, close == std::string::npos ? std::string::npos : close - body_start));
    }
  }
  std::istringstream in(response);
  std::string line, out;
  bool capturing = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!capturing) {
      const std::string low = to_lower(t);
      if (low.rfind("select", 0) == 0 || low.rfind("with", 0) == 0) {
        capturing = true;
        out = t;
      }
    } else {
      if (t.empty()) break;
      out += "\n" + t;
    }
  }
  return out;
}

std::optional<std::vector<std::string>> extract_string_array(const std::string& text) {
  for (auto start = text.find('['); start != std::string::npos; start = text.find('[', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '[') ++depth;
      else if (c == ']' && --depth == 0) {
        auto parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_array()) {
          std::vector<std::string> out;
          for (const auto& e : parsed)
            if (e.is_string()) out.push_back(e.get<std::string>());
            else if (e.is_object() && e.contains("name") && e["name"].is_string()) out.push_back(e["name"].get<std::string>());
          if (!out.empty()) return out;
        }
        break;
      }
    }
  }
  return std::nullopt;
}

}  // namespace schemaref
