#include "schemaref/synthesis.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "schemaref/error.hpp"
#include "schemaref/hashing.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"
#include "schemaref/parallel.hpp"
#include "schemaref/sql_refs.hpp"
#include "schemaref/sqlite_db.hpp"

namespace schemaref {

using nlohmann::json;

ConflictPlan propagate_pk_renames(const ConflictPlan& plan, const SchemaModel& schema) {
  ConflictPlan out = plan;
  out.propagation.clear();
  auto base_check = check_admissible(schema, out.mapping());
  if (!base_check.ok()) throw Error("propagation needs an admissible plan");

  const auto keys = plan.entries;
  for (const auto& key : keys) {
    if (key.final_name == key.original || !schema.column(key.column).is_pk) continue;
    PropagationRecord rec;
    rec.primary_key = key.column;
    rec.new_name = key.final_name;
    for (const auto& fk : schema.foreign_keys())
      if (fk.parent == key.column) rec.foreign_keys.push_back(fk.child);
    if (rec.foreign_keys.empty()) {
      rec.note = "no referencing foreign keys";
      out.propagation.push_back(std::move(rec));
      continue;
    }

    auto tentative = out;
    for (ColumnId child : rec.foreign_keys) {
      auto it = std::find_if(tentative.entries.begin(), tentative.entries.end(),
                             [&](const PlanEntry& e) { return e.column == child; });
      PlanEntry e{child, schema.qualified_name(child), schema.column(child).name, key.final_name,
                  Provenance::Propagated, std::nullopt, "follows " + schema.qualified_name(key.column)};
      if (it == tentative.entries.end()) tentative.entries.push_back(std::move(e));
      else *it = std::move(e);
    }
    std::sort(tentative.entries.begin(), tentative.entries.end(),
              [](const PlanEntry& a, const PlanEntry& b) { return a.column < b.column; });

    auto verdict = check_admissible(schema, tentative.mapping());
    if (verdict.ok()) {
      out = std::move(tentative);
      out.propagation.push_back(std::move(rec));
      continue;
    }
    const auto& v = verdict.violations.front();
    rec.rolled_back = true;
    rec.note = "rolled back: " + schema.qualified_name(v.first) + " and " + schema.qualified_name(v.second) +
               " would both be named " + v.name;
    log::warn("propagation of " + schema.qualified_name(key.column) + " -> " + key.final_name + " " + rec.note);
    for (auto& e : out.entries)
      if (e.column == key.column) {
        e.final_name = e.original;
        e.provenance = Provenance::Reverted;
        e.delta.reset();
        e.note = "primary key propagation " + rec.note;
      }
    out.propagation.push_back(std::move(rec));
  }
  return out;
}

namespace {

void validate_layer(const ViewLayer& layer, const std::filesystem::path& base_db) {
  auto conn = sqlite::Connection::open_memory();
  conn.attach_read_only(base_db, kBaseSchemaName);
  for (const auto& view : layer.views) {
    const std::string stmt = view.create_statement(true);
    try {
      conn.exec(stmt);
      conn.prepare("SELECT * FROM " + quote_identifier(view.table) + " LIMIT 0").step();
    } catch (const Error& e) {
      throw Error(std::string("view DDL failed: ") + e.what() + "\n  statement: " + stmt);
    }
  }
}

}  // namespace

ViewLayer synthesize_views(const ConflictPlan& plan, const SchemaModel& schema, const std::filesystem::path& base_db,
                           const std::filesystem::path& view_db) {
  ViewLayer layer;
  layer.mapping = plan.mapping();
  layer.propagation = plan.propagation;
  auto verdict = check_admissible(schema, layer.mapping);
  if (!verdict.ok()) {
    const auto& v = verdict.violations.front();
    throw Error("refusing to synthesize an inadmissible mapping: " + schema.qualified_name(v.first) + " and " +
                schema.qualified_name(v.second) + " both named " + v.name);
  }
  layer.views = build_view_defs(schema, layer.mapping);
  validate_layer(layer, base_db);

  std::error_code ec;
  std::filesystem::remove(view_db, ec);
  auto conn = sqlite::Connection::open(view_db, sqlite::OpenMode::ReadWriteCreate);
  conn.exec(
      "CREATE TABLE schemaref_meta(key TEXT PRIMARY KEY, value TEXT NOT NULL);"
      "CREATE TABLE schemaref_view(seq INTEGER PRIMARY KEY, table_name TEXT NOT NULL, select_sql TEXT NOT NULL);"
      "CREATE TABLE schemaref_mapping(table_name TEXT NOT NULL, column_name TEXT NOT NULL, final_name TEXT NOT NULL,"
      " PRIMARY KEY(table_name, column_name));"
      "BEGIN");
  const std::pair<const char*, std::string> rows[] = {
      {"format", "1"},
      {"db_id", schema.db_id()},
      {"base_path", std::filesystem::absolute(base_db).lexically_normal().string()},
      {"base_sha256", sha256_file(base_db)},
  };
  for (const auto& [k, v] : rows) {
    auto st = conn.prepare("INSERT INTO schemaref_meta VALUES (?, ?)");
    st.bind(1, k);
    st.bind(2, v);
    st.step();
  }
  for (std::size_t i = 0; i < layer.views.size(); ++i) {
    auto st = conn.prepare("INSERT INTO schemaref_view VALUES (?, ?, ?)");
    st.bind(1, static_cast<std::int64_t>(i));
    st.bind(2, layer.views[i].table);
    st.bind(3, layer.views[i].select_sql);
    st.step();
  }
  for (const auto& [id, name] : layer.mapping.entries) {
    const auto& col = schema.column(id);
    auto st = conn.prepare("INSERT INTO schemaref_mapping VALUES (?, ?, ?)");
    st.bind(1, col.table);
    st.bind(2, col.original_name);
    st.bind(3, name);
    st.step();
  }
  conn.exec("COMMIT");
  layer.view_db_path = view_db;
  return layer;
}

void write_views_sql(const ViewLayer& layer, const std::filesystem::path& base_db, const std::filesystem::path& out) {
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw Error("cannot write " + out.string());
  f << "-- Aliasing views over an unchanged base database. Run in a connection\n"
       "-- opened on any scratch database; nothing here writes to the base.\n";
  f << "ATTACH DATABASE " << quote_literal(std::filesystem::absolute(base_db).lexically_normal().string()) << " AS "
    << kBaseSchemaName << ";\n";
  for (const auto& v : layer.views) f << v.create_statement(true) << ";\n";
  if (!f) throw Error("cannot write " + out.string());
}

void write_mapping_json(const ConflictPlan& plan, const SchemaModel& schema, const std::filesystem::path& out) {
  json cols = json::array();
  for (const auto& e : plan.entries) {
    const auto& col = schema.column(e.column);
    json j{{"table", col.table},
           {"column", e.original},
           {"final_name", e.final_name},
           {"provenance", to_string(e.provenance)},
           {"delta", e.delta ? json(*e.delta) : json(nullptr)}};
    if (!e.note.empty()) j["note"] = e.note;
    cols.push_back(std::move(j));
  }
  json prop = json::array();
  for (const auto& p : plan.propagation) {
    json fks = json::array();
    for (ColumnId c : p.foreign_keys) fks.push_back(schema.qualified_name(c));
    prop.push_back({{"primary_key", schema.qualified_name(p.primary_key)},
                    {"new_name", p.new_name},
                    {"foreign_keys", std::move(fks)},
                    {"rolled_back", p.rolled_back},
                    {"note", p.note}});
  }
  std::ofstream f(out, std::ios::trunc);
  f << json{{"db_id", schema.db_id()}, {"columns", std::move(cols)}, {"propagation", std::move(prop)}}.dump(2) << "\n";
  if (!f) throw Error("cannot write " + out.string());
}

LoadedViewLayer load_view_layer(const std::filesystem::path& view_db, const SchemaModel& schema) {
  if (!std::filesystem::exists(view_db)) throw Error("no view database at " + view_db.string());
  auto conn = sqlite::Connection::open(view_db, sqlite::OpenMode::ReadOnly);
  LoadedViewLayer out;
  try {
    auto meta = conn.prepare("SELECT key, value FROM schemaref_meta");
    while (meta.step()) {
      const auto k = meta.column_text(0);
      if (k == "base_path") out.base_db = meta.column_text(1);
      else if (k == "base_sha256") out.base_sha256 = meta.column_text(1);
    }
    auto views = conn.prepare("SELECT table_name, select_sql FROM schemaref_view ORDER BY seq");
    while (views.step()) out.layer.views.push_back({views.column_text(0), views.column_text(1)});
    auto map = conn.prepare("SELECT table_name, column_name, final_name FROM schemaref_mapping");
    while (map.step()) {
      auto id = schema.find_column(map.column_text(0), map.column_text(1));
      if (!id) throw Error("view database maps unknown column " + map.column_text(0) + "." + map.column_text(1));
      out.layer.mapping.entries[*id] = map.column_text(2);
    }
  } catch (const Error& e) {
    throw Error(view_db.string() + " is not a view database: " + e.what());
  }
  out.layer.view_db_path = view_db;
  return out;
}

EquivalenceReport equivalence_check(const ViewLayer& layer, const std::vector<WorkloadItem>& workload,
                                    const SchemaModel& schema, const std::filesystem::path& base_db,
                                    std::size_t parallelism, std::chrono::milliseconds timeout) {
  EquivalenceReport report;
  report.checked = workload.size();
  auto shared = std::make_shared<const ViewLayer>(layer);
  const ExecutableSchema base = ExecutableSchema::base(base_db);
  const ExecutableSchema views{base_db, shared};

  std::vector<std::optional<Discrepancy>> found(workload.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, workload.size()));
  std::vector<std::unique_ptr<Session>> base_sessions(workers), view_sessions(workers);
  parallel_for(workload.size(), workers, [&](std::size_t i, std::size_t w) {
    const auto& item = workload[i];
    Discrepancy d{item.index, item.gold_sql, {}, {}};
    std::shared_ptr<const ResultSet> gold = item.gold;
    if (!gold) {
      if (!base_sessions[w]) base_sessions[w] = std::make_unique<Session>(base);
      auto res = base_sessions[w]->execute(item.gold_sql, timeout);
      if (!res.ok()) {
        d.reason = std::string("gold query fails on the base (") + to_string(res.error) + "): " + res.message;
        found[i] = std::move(d);
        return;
      }
      gold = std::make_shared<const ResultSet>(std::move(*res.result));
    }
    try {
      d.rewritten_sql = sql::rewrite_identifiers(item.gold_sql, layer.mapping, schema);
    } catch (const Error& e) {
      d.reason = std::string("rewrite failed: ") + e.what();
      found[i] = std::move(d);
      return;
    }
    if (!view_sessions[w]) view_sessions[w] = std::make_unique<Session>(views);
    auto res = view_sessions[w]->execute(d.rewritten_sql, timeout);
    if (!res.ok()) {
      d.reason = std::string("rewritten query fails on the views (") + to_string(res.error) + "): " + res.message;
      found[i] = std::move(d);
    } else if (!results_equal(*res.result, *gold)) {
      d.reason = "result sets differ";
      found[i] = std::move(d);
    }
  });
  for (auto& f : found)
    if (f) report.discrepancies.push_back(std::move(*f));
  return report;
}

}  // namespace schemaref
