#include "schemaref/schema.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"
#include "schemaref/sqlite_db.hpp"

namespace schemaref {

bool operator==(const ColumnRef& a, const ColumnRef& b) {
  return a.id == b.id && a.table == b.table && a.name == b.name && a.original_name == b.original_name &&
         a.data_type == b.data_type && a.is_pk == b.is_pk && a.is_fk == b.is_fk;
}

bool operator==(const TableDef& a, const TableDef& b) { return a.name == b.name && a.columns == b.columns; }

bool operator==(const SchemaModel& a, const SchemaModel& b) {
  return a.db_id_ == b.db_id_ && a.domain_ == b.domain_ && a.tables_ == b.tables_ && a.fks_ == b.fks_;
}

SchemaModel::SchemaModel(std::string db_id, std::vector<TableDef> tables, std::vector<ForeignKey> foreign_keys,
                         std::string domain_description)
    : db_id_(std::move(db_id)), domain_(std::move(domain_description)), tables_(std::move(tables)),
      fks_(std::move(foreign_keys)) {
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    auto& cols = tables_[t].columns;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      cols[c].id = {t, c};
      cols[c].table = tables_[t].name;
      if (cols[c].original_name.empty()) cols[c].original_name = cols[c].name;
      for (std::size_t d = 0; d < c; ++d)
        if (iequals(cols[c].name, cols[d].name))
          throw Error("duplicate column " + cols[c].name + " in table " + tables_[t].name);
    }
  }
  for (const auto& fk : fks_) {
    if (!contains(fk.child) || !contains(fk.parent)) throw Error("foreign key endpoint outside schema");
    tables_[fk.child.table].columns[fk.child.column].is_fk = true;
  }
  std::sort(fks_.begin(), fks_.end());
  fks_.erase(std::unique(fks_.begin(), fks_.end()), fks_.end());

  auto scopes = std::make_shared<std::vector<std::vector<std::vector<ColumnId>>>>();
  scopes->resize(tables_.size());
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    std::vector<ColumnId> same_table;
    for (std::size_t c = 0; c < tables_[t].columns.size(); ++c) same_table.push_back({t, c});
    (*scopes)[t].assign(tables_[t].columns.size(), same_table);
  }
  for (const auto& fk : fks_) {
    (*scopes)[fk.child.table][fk.child.column].push_back(fk.parent);
    (*scopes)[fk.parent.table][fk.parent.column].push_back(fk.child);
  }
  for (auto& per_table : *scopes)
    for (auto& s : per_table) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
  scopes_ = std::move(scopes);
}

std::size_t SchemaModel::column_count() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.columns.size();
  return n;
}

std::vector<ColumnId> SchemaModel::column_ids() const {
  std::vector<ColumnId> ids;
  for (const auto& t : tables_)
    for (const auto& c : t.columns) ids.push_back(c.id);
  return ids;
}

bool SchemaModel::contains(ColumnId id) const {
  return id.table < tables_.size() && id.column < tables_[id.table].columns.size();
}

const ColumnRef& SchemaModel::column(ColumnId id) const {
  if (!contains(id)) throw Error("unknown column id");
  return tables_[id.table].columns[id.column];
}

std::optional<std::size_t> SchemaModel::find_table(std::string_view name) const {
  for (std::size_t t = 0; t < tables_.size(); ++t)
    if (iequals(tables_[t].name, name)) return t;
  return std::nullopt;
}

std::optional<ColumnId> SchemaModel::find_column(std::string_view table, std::string_view name) const {
  auto t = find_table(table);
  if (!t) return std::nullopt;
  for (const auto& c : tables_[*t].columns)
    if (iequals(c.name, name)) return c.id;
  return std::nullopt;
}

const std::vector<ColumnId>& SchemaModel::scope(ColumnId id) const {
  if (!contains(id)) throw Error("scope of unknown column");
  return (*scopes_)[id.table][id.column];
}

bool SchemaModel::fk_linked(ColumnId a, ColumnId b) const {
  return std::binary_search(fks_.begin(), fks_.end(), ForeignKey{a, b}) ||
         std::binary_search(fks_.begin(), fks_.end(), ForeignKey{b, a});
}

SchemaModel SchemaModel::with_name(ColumnId id, std::string new_name) const {
  if (!contains(id)) throw Error("rename of unknown column");
  SchemaModel copy = *this;
  copy.tables_[id.table].columns[id.column].name = std::move(new_name);
  return copy;
}

std::string SchemaModel::qualified_name(ColumnId id) const {
  const auto& c = column(id);
  return c.table + "." + c.name;
}

const std::string& RefinementMapping::name_of(const SchemaModel& schema, ColumnId id) const {
  auto it = entries.find(id);
  return it == entries.end() ? schema.column(id).name : it->second;
}

SchemaModel load_schema(const std::filesystem::path& db_path, std::string domain_description) {
  auto conn = sqlite::Connection::open(db_path, sqlite::OpenMode::ReadOnly);
  std::vector<TableDef> tables;
  {
    auto st = conn.prepare(
        "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
        "ORDER BY rowid");
    while (st.step()) tables.push_back(TableDef{st.column_text(0), {}});
  }
  if (tables.empty()) throw Error("database has no tables: " + db_path.string());

  struct RawFk {
    std::size_t child_table;
    std::string child_col, parent_table;
    std::optional<std::string> parent_col;
  };
  std::vector<RawFk> raw_fks;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    auto info = conn.prepare("SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid");
    info.bind(1, tables[t].name);
    while (info.step()) {
      ColumnRef col;
      col.name = info.column_text(0);
      col.original_name = col.name;
      col.data_type = info.column_text(1);
      col.is_pk = info.column_int(2) > 0;
      tables[t].columns.push_back(std::move(col));
    }
    auto fkl = conn.prepare("SELECT \"from\", \"table\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id, seq");
    fkl.bind(1, tables[t].name);
    while (fkl.step()) raw_fks.push_back({t, fkl.column_text(0), fkl.column_text(1), fkl.column_text_or_null(2)});
  }

  SchemaModel probe(db_path.stem().string(), tables, {}, domain_description);
  std::vector<ForeignKey> fks;
  for (const auto& r : raw_fks) {
    auto child = probe.find_column(tables[r.child_table].name, r.child_col);
    std::optional<ColumnId> parent;
    if (r.parent_col && !r.parent_col->empty()) {
      parent = probe.find_column(r.parent_table, *r.parent_col);
    } else if (auto pt = probe.find_table(r.parent_table)) {
      for (const auto& c : tables[*pt].columns)
        if (c.is_pk) {
          parent = ColumnId{*pt, static_cast<std::size_t>(&c - tables[*pt].columns.data())};
          break;
        }
    }
    if (!child || !parent) {
      log::warn("skipping dangling foreign key " + tables[r.child_table].name + "." + r.child_col + " -> " +
                r.parent_table);
      continue;
    }
    fks.push_back({*child, *parent});
  }
  return SchemaModel(db_path.stem().string(), std::move(tables), std::move(fks), std::move(domain_description));
}

std::vector<ColumnId> scope_of(const SchemaModel& schema, ColumnId column) { return schema.scope(column); }

namespace {

bool share_scope(const SchemaModel& schema, ColumnId a, ColumnId b) {
  if (a.table == b.table) return true;
  for (const auto& fk : schema.foreign_keys()) {
    // a partner of some column in b's table, or vice versa
    if ((fk.child == a && fk.parent.table == b.table) || (fk.parent == a && fk.child.table == b.table)) return true;
    if ((fk.child == b && fk.parent.table == a.table) || (fk.parent == b && fk.child.table == a.table)) return true;
  }
  return false;
}

// FK columns in different tables that reference the same key
bool co_referencing(const SchemaModel& schema, ColumnId a, ColumnId b) {
  if (a.table == b.table) return false;
  for (const auto& fa : schema.foreign_keys()) {
    if (fa.child != a) continue;
    for (const auto& fb : schema.foreign_keys())
      if (fb.child == b && fb.parent == fa.parent) return true;
  }
  return false;
}

std::optional<ColumnId> common_scope_owner(const SchemaModel& schema, ColumnId a, ColumnId b) {
  if (a.table == b.table) return std::min(a, b);
  for (ColumnId owner : {a, b}) {
    const auto& s = schema.scope(owner);
    if (std::binary_search(s.begin(), s.end(), a) && std::binary_search(s.begin(), s.end(), b)) return owner;
  }
  for (const auto& fk : schema.foreign_keys()) {
    for (ColumnId owner : {fk.child, fk.parent}) {
      const auto& s = schema.scope(owner);
      if (std::binary_search(s.begin(), s.end(), a) && std::binary_search(s.begin(), s.end(), b)) return owner;
    }
  }
  return std::nullopt;
}

}  // namespace

bool names_conflict(const SchemaModel& schema, ColumnId a, const std::string& a_name, ColumnId b,
                    const std::string& b_name) {
  if (a == b || !iequals(a_name, b_name)) return false;
  if (schema.fk_linked(a, b) || co_referencing(schema, a, b)) return false;
  if (iequals(schema.column(a).original_name, schema.column(b).original_name)) return false;
  return share_scope(schema, a, b);
}

AdmissibilityVerdict check_admissible(const SchemaModel& schema, const RefinementMapping& mapping) {
  for (const auto& [id, _] : mapping.entries)
    if (!schema.contains(id)) throw Error("mapping names a column outside the schema");

  // Bucket by final name; only same-name columns can conflict.
  std::map<std::string, std::vector<ColumnId>> by_name;
  for (ColumnId id : schema.column_ids()) by_name[to_lower(mapping.name_of(schema, id))].push_back(id);

  AdmissibilityVerdict verdict;
  for (const auto& [lname, ids] : by_name) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        const auto& ni = mapping.name_of(schema, ids[i]);
        const auto& nj = mapping.name_of(schema, ids[j]);
        if (!names_conflict(schema, ids[i], ni, ids[j], nj)) continue;
        verdict.violations.push_back({*common_scope_owner(schema, ids[i], ids[j]), ni, ids[i], ids[j]});
      }
  }
  return verdict;
}

SchemaModel apply_rename(const SchemaModel& schema, ColumnId column, const std::string& new_name) {
  if (!schema.contains(column)) throw Error("rename of unknown column");
  if (!is_plain_identifier(new_name)) throw Error("not a valid identifier: '" + new_name + "'");
  for (ColumnId other : schema.column_ids()) {
    if (other == column) continue;
    if (names_conflict(schema, column, new_name, other, schema.column(other).name))
      throw Error("rename " + schema.qualified_name(column) + " -> " + new_name + " collides with " +
                  schema.qualified_name(other));
  }
  return schema.with_name(column, new_name);
}

SchemaModel apply_mapping(const SchemaModel& schema, const RefinementMapping& mapping) {
  auto verdict = check_admissible(schema, mapping);
  if (!verdict.ok()) {
    const auto& v = verdict.violations.front();
    throw Error("inadmissible mapping: " + schema.qualified_name(v.first) + " and " +
                schema.qualified_name(v.second) + " both named " + v.name);
  }
  SchemaModel out = schema;
  for (const auto& [id, name] : mapping.entries) out = out.with_name(id, name);
  return out;
}

}  // namespace schemaref
