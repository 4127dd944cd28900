#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/data_source.hpp"
#include "schemaref/llm_client.hpp"
#include "schemaref/schema.hpp"

namespace schemaref {

/// The binary question put to an LLM screener.
inline constexpr const char* kScreeningQuestion = "Could this column name cause confusion for a Text-to-SQL model?";

/// Rubric shown to screeners (versioned with the prompt template).
inline constexpr const char* kScreeningCriteria =
    "Flag the name if it is an abbreviation or truncation, a domain-specific term with several plausible "
    "meanings, a single-letter or letter+digit code, or generic vocabulary (label, value, data, info, type, "
    "code) that does not say what the column holds.";

inline constexpr const char* kScreeningPromptVersion = "screen-v1";

/// Everything a screener may look at for one column.
struct ScreeningContext {
  ColumnId column;
  std::string domain_description;
  std::string table;
  std::string column_name;
  std::string data_type;
  std::vector<std::string> neighbor_columns;
  std::vector<std::string> sample_header;
  std::vector<SampleRow> sample_rows;  ///< at most 5, rowid order
  std::string criteria = kScreeningCriteria;

  std::string serialize() const;  ///< JSON
};

struct ScreeningVerdict {
  ColumnId column;
  std::string qualified_name;
  bool flagged = false;
  std::string reason;
  std::string source;  ///< screener id
};

struct Exclusion {
  ColumnId column;
  std::string qualified_name;
  std::string reason;
};

struct ScreenAnswer {
  bool answered = false;  ///< false on transport failure
  bool flagged = false;
  std::string reason;
};

class Screener {
public:
  virtual ~Screener() = default;
  virtual std::string id() const = 0;
  virtual ScreenAnswer assess(const ScreeningContext& ctx) = 0;
};

/// Offline heuristic: flags names of at most 3 characters, names with an
/// underscore-separated segment of at most 6 characters and no vowel,
/// single-letter codes (`^[A-Za-z][0-9]+$`), and generic words.
class RuleScreener final : public Screener {
public:
  std::string id() const override { return "rules"; }
  ScreenAnswer assess(const ScreeningContext& ctx) override;
};

class LlmScreener final : public Screener {
public:
  LlmScreener(std::string id, ChatEndpoint endpoint) : id_(std::move(id)), endpoint_(std::move(endpoint)) {}
  std::string id() const override { return id_; }
  ScreenAnswer assess(const ScreeningContext& ctx) override;

  static std::vector<ChatMessage> build_prompt(const ScreeningContext& ctx);
  /// yes → flagged, no → not flagged, anything else → flagged.
  static ScreenAnswer parse_answer(const std::string& content);

private:
  std::string id_;
  ChatEndpoint endpoint_;
};

/// FK columns, and cross-table homonyms sharing name and declared type
/// without an FK link. Primary keys stay eligible.
std::vector<Exclusion> structural_exclusions(const SchemaModel& schema);

ScreeningContext build_screening_context(const SchemaModel& schema, ColumnId column, const DataSource& data);

struct ScreeningResult {
  std::vector<Exclusion> excluded;
  std::vector<ScreeningVerdict> verdicts;  ///< non-excluded columns, (table, column) order

  std::vector<ColumnId> flagged() const;
  std::size_t unflagged_count() const;
};

/// One verdict per non-excluded column. A screener that cannot answer
/// leaves the column flagged.
ScreeningResult screen(const SchemaModel& schema, Screener& screener, const DataSource& data,
                       std::size_t parallelism = 1);

}  // namespace schemaref
