#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "schemaref/schema.hpp"

namespace schemaref {

/// Name the base database is attached under inside a view connection.
inline constexpr const char* kBaseSchemaName = "base";

/// One aliasing view over a base table; the view keeps the table's name.
struct ViewDef {
  std::string table;
  std::string select_sql;  ///< `SELECT c1 AS r1, ... FROM base.t`

  std::string create_statement(bool temporary) const;
};

struct PropagationRecord {
  ColumnId primary_key;
  std::string new_name;
  std::vector<ColumnId> foreign_keys;
  bool rolled_back = false;
  std::string note;
};

/// Refined schema materialized as views over the untouched base tables.
struct ViewLayer {
  RefinementMapping mapping;
  std::vector<ViewDef> views;
  std::filesystem::path view_db_path;  ///< empty for in-memory layers
  std::vector<PropagationRecord> propagation;

  /// Full DDL, one statement per view, persistent form.
  std::vector<std::string> ddl() const;
};

/// Builds one aliasing view per table for `mapping` (no admissibility
/// check; callers validate first).
std::vector<ViewDef> build_view_defs(const SchemaModel& schema, const RefinementMapping& mapping);

}  // namespace schemaref
