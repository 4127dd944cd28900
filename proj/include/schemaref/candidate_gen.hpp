#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/data_source.hpp"
#include "schemaref/llm_client.hpp"
#include "schemaref/schema.hpp"

namespace schemaref {

inline constexpr std::size_t kDefaultTargetSamples = 20;
inline constexpr std::size_t kNeighborSamples = 5;
inline constexpr std::size_t kDefaultCandidateCount = 3;

inline constexpr const char* kRenamingGuidelines =
    "1. Expand abbreviations and codes into full words that agree with the sample values.\n"
    "2. Keep names short snake_case identifiers and never change what the column means.\n"
    "3. Include the original name if it is already clear.";

struct NeighborColumn {
  std::string name;
  std::string data_type;
  std::vector<std::string> samples;  ///< up to 5 values
};

struct GenerationContext {
  ColumnId column;
  std::string domain_description;
  std::string table;
  std::string column_name;
  std::string data_type;
  std::vector<NeighborColumn> neighbors;
  std::vector<std::string> target_samples;  ///< up to N_s distinct values
  std::string guidelines = kRenamingGuidelines;

  std::string serialize() const;  ///< JSON
};

/// Deterministic for a fixed seed. Empty tables give empty sample lists.
GenerationContext build_context(const SchemaModel& schema, ColumnId column, const DataSource& data, std::uint64_t seed,
                                std::size_t target_samples = kDefaultTargetSamples);

struct CandidateSet {
  ColumnId column;
  std::string original;
  std::vector<std::string> candidates;  ///< ranked, at most k, never the original
  std::string generator;

  /// {original} followed by the candidates.
  std::vector<std::string> augmented() const;
};

class Generator {
public:
  virtual ~Generator() = default;
  virtual std::string id() const = 0;
  /// Ranked raw proposals; nullopt when the generator could not be reached.
  virtual std::optional<std::vector<std::string>> propose(const GenerationContext& ctx, std::size_t k) = 0;
};

/// Abbreviation lookup. Each entry maps a lowercase token to its expansion
/// followed by alternates (e.g. nm → name, full_name).
class DictionaryGenerator final : public Generator {
public:
  using Table = std::map<std::string, std::vector<std::string>>;

  DictionaryGenerator();  ///< built-in table
  explicit DictionaryGenerator(Table table) : table_(std::move(table)) {}

  /// Built-in table overlaid with a TSV file of `abbr<TAB>expansion[,alt...]`.
  static DictionaryGenerator from_file(const std::filesystem::path& tsv);
  static Table builtin_table();

  std::string id() const override { return "dictionary"; }
  /// Table-prefixed expansion first (skipped when the expansion already
  /// names the table), then the plain expansion, then alternates.
  std::optional<std::vector<std::string>> propose(const GenerationContext& ctx, std::size_t k) override;

private:
  Table table_;
};

class LlmGenerator final : public Generator {
public:
  LlmGenerator(std::string id, ChatEndpoint endpoint) : id_(std::move(id)), endpoint_(std::move(endpoint)) {}
  std::string id() const override { return id_; }
  std::optional<std::vector<std::string>> propose(const GenerationContext& ctx, std::size_t k) override;

  static std::vector<ChatMessage> build_prompt(const GenerationContext& ctx, std::size_t k);

private:
  std::string id_;
  ChatEndpoint endpoint_;
};

/// Normalizes, drops invalid names and the original, deduplicates, removes
/// names that collide within scope on the unrenamed schema, and keeps the
/// first k. A generator failure yields an empty candidate list.
CandidateSet generate(const SchemaModel& schema, const GenerationContext& ctx, Generator& generator,
                      std::size_t k = kDefaultCandidateCount);

}  // namespace schemaref
