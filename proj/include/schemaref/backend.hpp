#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/data_source.hpp"
#include "schemaref/llm_client.hpp"
#include "schemaref/schema.hpp"

namespace schemaref {

struct PromptColumn {
  std::string name;
  std::string type;
  bool is_pk = false;
};

struct PromptForeignKey {
  std::string child_table, child_column, parent_table, parent_column;
};

struct PromptTable {
  std::string name;
  std::vector<PromptColumn> columns;
  std::vector<SampleRow> sample_rows;
};

/// What a Text-to-SQL system sees: the question plus the schema under
/// evaluation (refined names only) and optional sample rows.
struct Text2SqlRequest {
  std::string question;
  std::vector<PromptTable> tables;
  std::vector<PromptForeignKey> foreign_keys;

  /// Compact CREATE TABLE-style listing; sample rows follow each table as
  /// a comment block when present.
  std::string serialize_schema() const;
  /// SHA-256 of serialize_schema().
  std::string schema_fingerprint() const;
};

/// Builds a request from `schema`'s current names. Sample rows come from
/// the base data and are attached when `samples_per_table` > 0.
Text2SqlRequest make_request(const std::string& question, const SchemaModel& schema, const DataSource* data,
                             std::size_t samples_per_table = 5);

struct Text2SqlResponse {
  std::string predicted_sql;
  bool failed = false;
  std::string error;
  std::string backend_id;
  double latency_ms = 0;
};

/// Must be safe to call infer() concurrently.
class Text2SqlBackend {
public:
  virtual ~Text2SqlBackend() = default;
  virtual std::string id() const = 0;
  virtual Text2SqlResponse infer(const Text2SqlRequest& request) = 0;
};

/// Deterministic lexical matcher. Scores each column by the fraction of its
/// underscore-separated name tokens present in the question, picks the table
/// with the highest summed column plus table-name score, then selects every
/// fully matched column (or the single best partial match, or `*`).
/// "how many" questions become COUNT(*); a question word equal to a sampled
/// text value adds a WHERE equality on that value's column.
class MockBackend final : public Text2SqlBackend {
public:
  explicit MockBackend(std::string id = "mock") : id_(std::move(id)) {}
  std::string id() const override { return id_; }
  Text2SqlResponse infer(const Text2SqlRequest& request) override;

private:
  std::string id_;
};

/// Zero-shot chat-completion adapter.
class LlmBackend final : public Text2SqlBackend {
public:
  LlmBackend(std::string id, ChatEndpoint endpoint, int max_in_flight = 4);
  std::string id() const override { return id_; }
  Text2SqlResponse infer(const Text2SqlRequest& request) override;

  static std::vector<ChatMessage> build_prompt(const Text2SqlRequest& request);

private:
  std::string id_;
  ChatEndpoint endpoint_;
  int max_in_flight_;
  std::mutex mutex_;
  std::condition_variable slots_;
  int in_flight_ = 0;
};

/// Thread-safe response store keyed by (backend id, schema fingerprint,
/// question). Persists as JSON Lines when given a file.
class ResponseCache {
public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path file);

  static std::string key(const std::string& backend_id, const std::string& fingerprint, const std::string& question);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& sql);
  std::size_t size() const;

private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
  std::filesystem::path file_;
};

/// Backend decorator consulting a ResponseCache. In replay-only mode a
/// miss yields a failure marker instead of calling the inner backend.
class CachingBackend final : public Text2SqlBackend {
public:
  CachingBackend(std::shared_ptr<Text2SqlBackend> inner, std::shared_ptr<ResponseCache> cache,
                 bool replay_only = false);
  std::string id() const override { return inner_->id(); }
  Text2SqlResponse infer(const Text2SqlRequest& request) override;

  std::size_t inner_calls() const { return inner_calls_; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

private:
  std::shared_ptr<Text2SqlBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  bool replay_only_;
  std::atomic<std::size_t> inner_calls_{0}, hits_{0}, misses_{0};
};

}  // namespace schemaref
