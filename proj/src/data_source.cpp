#include "schemaref/data_source.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/sqlite_db.hpp"

namespace schemaref {

namespace {

std::optional<std::string> render(const sqlite::Statement& st, int i) {
  switch (st.column_type(i)) {
    case SQLITE_NULL: return std::nullopt;
    case SQLITE_BLOB: return std::string("<blob>");
    default: return st.column_text(i);
  }
}

}  // namespace

DataSource::DataSource(std::filesystem::path db_path, const SchemaModel& schema) : db_path_(std::move(db_path)) {
  for (const auto& t : schema.tables()) {
    table_names_.push_back(t.name);
    std::vector<std::string> cols;
    for (const auto& c : t.columns) cols.push_back(c.original_name);
    column_names_.push_back(std::move(cols));
  }
}

std::vector<SampleRow> DataSource::sample_rows(std::size_t table, std::size_t n) const {
  if (table >= table_names_.size()) throw Error("sample_rows: unknown table");
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(table, n);
  if (auto it = row_cache_.find(key); it != row_cache_.end()) return it->second;

  auto conn = sqlite::Connection::open(db_path_, sqlite::OpenMode::ReadOnly);
  std::string cols;
  for (std::size_t i = 0; i < column_names_[table].size(); ++i) {
    if (i) cols += ", ";
    cols += quote_identifier(column_names_[table][i]);
  }
  const std::string from = " FROM " + quote_identifier(table_names_[table]);
  const std::string limit = " LIMIT " + std::to_string(n);
  std::optional<sqlite::Statement> st;
  try {
    st.emplace(conn.prepare("SELECT " + cols + from + " ORDER BY rowid" + limit));
  } catch (const Error&) {
    st.emplace(conn.prepare("SELECT " + cols + from + limit));
  }
  std::vector<SampleRow> rows;
  while (st->step()) {
    SampleRow row;
    for (int i = 0; i < st->column_count(); ++i) row.push_back(render(*st, i));
    rows.push_back(std::move(row));
  }
  row_cache_[key] = rows;
  return rows;
}

std::vector<std::string> DataSource::column_samples(ColumnId column, std::size_t n, std::uint64_t seed) const {
  if (column.table >= table_names_.size() || column.column >= column_names_[column.table].size())
    throw Error("column_samples: unknown column");
  auto conn = sqlite::Connection::open(db_path_, sqlite::OpenMode::ReadOnly);
  const auto& col = quote_identifier(column_names_[column.table][column.column]);
  auto st = conn.prepare("SELECT DISTINCT " + col + " FROM " + quote_identifier(table_names_[column.table]) +
                         " WHERE " + col + " IS NOT NULL LIMIT 10000");
  std::vector<std::string> values;
  while (st.step())
    if (auto v = render(st, 0)) values.push_back(*v);
  if (values.size() <= n) return values;

  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed ^ (column.table * 0x9E3779B97F4A7C15ULL) ^ (column.column + 1));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(values[i]);
  return out;
}

}  // namespace schemaref
