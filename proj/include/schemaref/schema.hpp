#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace schemaref {

/// Stable identity of a column: (table index, column index) in load order.
/// Survives renames, unlike the surface name.
struct ColumnId {
  std::size_t table = 0;
  std::size_t column = 0;
  auto operator<=>(const ColumnId&) const = default;
};

struct ColumnRef {
  ColumnId id;
  std::string table;
  std::string name;           ///< current surface name
  std::string original_name;  ///< surface name in the loaded database
  std::string data_type;
  bool is_pk = false;
  bool is_fk = false;
};

struct TableDef {
  std::string name;
  std::vector<ColumnRef> columns;
};

struct ForeignKey {
  ColumnId child;
  ColumnId parent;
  auto operator<=>(const ForeignKey&) const = default;
};

/// Immutable schema snapshot. Copies produced by renames share the scope
/// cache, which depends only on structure.
class SchemaModel {
public:
  SchemaModel(std::string db_id, std::vector<TableDef> tables, std::vector<ForeignKey> foreign_keys,
              std::string domain_description = {});

  const std::string& db_id() const { return db_id_; }
  const std::string& domain_description() const { return domain_; }
  const std::vector<TableDef>& tables() const { return tables_; }
  const std::vector<ForeignKey>& foreign_keys() const { return fks_; }

  std::size_t column_count() const;
  /// All columns in (table, column) load order.
  std::vector<ColumnId> column_ids() const;
  const ColumnRef& column(ColumnId id) const;
  bool contains(ColumnId id) const;

  std::optional<std::size_t> find_table(std::string_view name) const;
  std::optional<ColumnId> find_column(std::string_view table, std::string_view name) const;

  /// Same-table columns plus direct FK partners, sorted.
  const std::vector<ColumnId>& scope(ColumnId id) const;

  bool fk_linked(ColumnId a, ColumnId b) const;

  /// Copy with one surface name replaced; no admissibility check.
  SchemaModel with_name(ColumnId id, std::string new_name) const;

  /// `table.column` using current names.
  std::string qualified_name(ColumnId id) const;

  friend bool operator==(const SchemaModel& a, const SchemaModel& b);

private:
  std::string db_id_;
  std::string domain_;
  std::vector<TableDef> tables_;
  std::vector<ForeignKey> fks_;
  std::shared_ptr<const std::vector<std::vector<std::vector<ColumnId>>>> scopes_;
};

bool operator==(const ColumnRef& a, const ColumnRef& b);
bool operator==(const TableDef& a, const TableDef& b);

/// Column → new surface name; absent columns keep their current name.
struct RefinementMapping {
  std::map<ColumnId, std::string> entries;

  const std::string& name_of(const SchemaModel& schema, ColumnId id) const;
  bool empty() const { return entries.empty(); }
};

struct AdmissibilityViolation {
  ColumnId scope_owner;  ///< a column whose scope contains both
  std::string name;
  ColumnId first;
  ColumnId second;
};

struct AdmissibilityVerdict {
  std::vector<AdmissibilityViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Introspects a SQLite file. Throws on unreadable files and empty schemas.
SchemaModel load_schema(const std::filesystem::path& db_path, std::string domain_description = {});

/// Scope of a column; throws on unknown columns.
std::vector<ColumnId> scope_of(const SchemaModel& schema, ColumnId column);

/// Two columns conflict when some scope holds both, their final names match
/// case-insensitively, and no exemption applies. Exempt are direct FK pairs,
/// FK columns in different tables referencing the same key, and pairs that
/// already shared their original name in the loaded database.
bool names_conflict(const SchemaModel& schema, ColumnId a, const std::string& a_name, ColumnId b,
                    const std::string& b_name);

AdmissibilityVerdict check_admissible(const SchemaModel& schema, const RefinementMapping& mapping);

/// Throws when `new_name` is not a plain identifier or the result would be
/// inadmissible.
SchemaModel apply_rename(const SchemaModel& schema, ColumnId column, const std::string& new_name);

/// Applies every entry of `mapping` (after an admissibility check).
SchemaModel apply_mapping(const SchemaModel& schema, const RefinementMapping& mapping);

}  // namespace schemaref
