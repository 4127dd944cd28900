#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace schemaref {

/// OpenAI-style chat-completion endpoint. The API key is read from the
/// environment variable named by `api_key_env` at call time.
struct ChatEndpoint {
  std::string base_url;  ///< e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key_env;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 1;
  double temperature = 0.0;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatReply {
  std::optional<std::string> content;  ///< empty on failure
  std::string error;
};

/// POSTs to `<base_url>/chat/completions` and returns the first choice's
/// message content. Never throws for transport or protocol failures.
ChatReply chat_complete(const ChatEndpoint& endpoint, const std::vector<ChatMessage>& messages);

/// Content of the first ``` fenced block, else the first line that starts
/// with SELECT or WITH together with the lines that follow it up to a blank
/// line. Empty when neither exists.
std::string extract_sql(const std::string& response);

/// First well-formed JSON array of strings embedded in `text`.
std::optional<std::vector<std::string>> extract_string_array(const std::string& text);

}  // namespace schemaref
