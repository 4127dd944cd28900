#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/schema.hpp"

namespace schemaref {

using SampleRow = std::vector<std::optional<std::string>>;

/// Read-only access to base-table contents for prompts and screening.
/// Values are rendered as text; NULL stays empty. Thread-safe.
class DataSource {
public:
  DataSource(std::filesystem::path db_path, const SchemaModel& schema);

  const std::filesystem::path& db_path() const { return db_path_; }

  /// First `n` rows of a table in rowid order (insertion order for
  /// WITHOUT ROWID tables).
  std::vector<SampleRow> sample_rows(std::size_t table, std::size_t n = 5) const;

  /// Up to `n` distinct non-NULL values of a column, chosen by a seeded
  /// shuffle when more exist; returned in first-seen order.
  std::vector<std::string> column_samples(ColumnId column, std::size_t n, std::uint64_t seed) const;

private:
  std::filesystem::path db_path_;
  std::vector<std::string> table_names_;
  std::vector<std::vector<std::string>> column_names_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::vector<SampleRow>> row_cache_;
};

}  // namespace schemaref
