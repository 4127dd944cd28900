#include "schemaref/exec.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "schemaref/error.hpp"
#include "schemaref/sql_lexer.hpp"
#include "schemaref/sql_refs.hpp"

namespace schemaref {

const char* to_string(ExecErrorKind kind) {
  switch (kind) {
    case ExecErrorKind::None: return "none";
    case ExecErrorKind::Rejected: return "rejected";
    case ExecErrorKind::Syntax: return "syntax";
    case ExecErrorKind::MissingRelation: return "missing_relation";
    case ExecErrorKind::MissingColumn: return "missing_column";
    case ExecErrorKind::Timeout: return "timeout";
    case ExecErrorKind::Runtime: return "runtime";
  }
  return "unknown";
}

namespace {

sqlite::Connection open_for(const ExecutableSchema& schema) {
  if (!schema.view_layer) return sqlite::Connection::open(schema.db_path, sqlite::OpenMode::ReadOnly);
  const auto& layer = *schema.view_layer;
  auto conn = !layer.view_db_path.empty() && std::filesystem::exists(layer.view_db_path)
                  ? sqlite::Connection::open(layer.view_db_path, sqlite::OpenMode::ReadOnly)
                  : sqlite::Connection::open_memory();
  conn.attach_read_only(schema.db_path, kBaseSchemaName);
  for (const auto& view : layer.views) conn.exec(view.create_statement(true));
  return conn;
}

ExecErrorKind classify(const std::string& message) {
  if (message.find("no such table") != std::string::npos) return ExecErrorKind::MissingRelation;
  if (message.find("no such column") != std::string::npos) return ExecErrorKind::MissingColumn;
  if (message.find("syntax error") != std::string::npos || message.find("incomplete input") != std::string::npos ||
      message.find("unrecognized token") != std::string::npos)
    return ExecErrorKind::Syntax;
  return ExecErrorKind::Runtime;
}

bool only_trivia(std::string_view tail) {
  try {
    for (const auto& t : sql::tokenize(tail))
      if (!t.trivia() && !t.is_punct(";")) return false;
  } catch (const Error&) {
    return false;
  }
  return true;
}

Value read_cell(const sqlite::Statement& st, int i) {
  switch (st.column_type(i)) {
    case SQLITE_INTEGER: return st.column_int(i);
    case SQLITE_FLOAT: return st.column_double(i);
    case SQLITE_TEXT: return st.column_text(i);
    case SQLITE_BLOB: return Blob{st.column_blob(i)};
    default: return std::monostate{};
  }
}

bool is_numeric(const Value& v) { return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v); }

long double as_number(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<long double>(*i);
  return static_cast<long double>(std::get<double>(v));
}

bool cells_equal(const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) {
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b))
      return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    return std::fabs(as_number(a) - as_number(b)) <= kNumericTolerance;
  }
  return a == b;
}

// Sort key for multiset comparison: (type rank, bucketed number, text).
using CellKey = std::tuple<int, long long, long double, std::string>;

CellKey cell_key(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return {0, 0, 0, {}};
  if (is_numeric(v)) {
    const long double x = as_number(v);
    if (std::fabs(x) < 9e12L) return {1, std::llround(x / kNumericTolerance), 0, {}};
    return {2, 0, x, {}};
  }
  if (auto* s = std::get_if<std::string>(&v)) return {3, 0, 0, *s};
  return {4, 0, 0, std::get<Blob>(v).bytes};
}

}  // namespace

Session::Session(const ExecutableSchema& schema) : conn_(open_for(schema)) {}

ExecResult Session::execute(std::string_view sql, std::chrono::milliseconds timeout) {
  ExecResult out;
  std::string lead;
  try {
    lead = sql::leading_keyword(sql);
  } catch (const Error& e) {
    out.error = ExecErrorKind::Syntax;
    out.message = e.what();
    return out;
  }
  if (lead != "select" && lead != "with") {
    out.error = ExecErrorKind::Rejected;
    out.message = "only SELECT statements are executed";
    return out;
  }
  try {
    auto st = conn_.prepare(sql);
    if (!only_trivia(st.tail())) {
      out.error = ExecErrorKind::Rejected;
      out.message = "multiple statements";
      return out;
    }
    if (!st.read_only()) {
      out.error = ExecErrorKind::Rejected;
      out.message = "statement is not read-only";
      return out;
    }
    ResultSet rs;
    rs.column_count = static_cast<std::size_t>(st.column_count());
    rs.ordered = sql::has_top_level_order_by(sql);
    sqlite::DeadlineGuard guard(conn_.get(), std::chrono::steady_clock::now() + timeout);
    try {
      while (st.step()) {
        if (rs.rows.size() >= kRowCap) {
          rs.truncated = true;
          break;
        }
        std::vector<Value> row;
        row.reserve(rs.column_count);
        for (int i = 0; i < static_cast<int>(rs.column_count); ++i) row.push_back(read_cell(st, i));
        rs.rows.push_back(std::move(row));
      }
    } catch (const Error& e) {
      out.error = guard.expired() ? ExecErrorKind::Timeout : classify(e.what());
      out.message = e.what();
      return out;
    }
    out.result = std::move(rs);
  } catch (const Error& e) {
    out.error = classify(e.what());
    out.message = e.what();
  }
  return out;
}

ExecResult execute(const ExecutableSchema& schema, std::string_view sql, std::chrono::milliseconds timeout) {
  try {
    Session session(schema);
    return session.execute(sql, timeout);
  } catch (const Error& e) {
    ExecResult out;
    out.error = ExecErrorKind::Runtime;
    out.message = e.what();
    return out;
  }
}

bool results_equal(const ResultSet& a, const ResultSet& b) {
  if (a.truncated || b.truncated) return false;
  if (a.column_count != b.column_count || a.rows.size() != b.rows.size()) return false;
  if (a.ordered || b.ordered) {
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      if (a.rows[r].size() != b.rows[r].size()) return false;
      for (std::size_t c = 0; c < a.rows[r].size(); ++c)
        if (!cells_equal(a.rows[r][c], b.rows[r][c])) return false;
    }
    return true;
  }
  auto keys = [](const ResultSet& rs) {
    std::vector<std::vector<CellKey>> out;
    out.reserve(rs.rows.size());
    for (const auto& row : rs.rows) {
      std::vector<CellKey> k;
      k.reserve(row.size());
      for (const auto& v : row) k.push_back(cell_key(v));
      out.push_back(std::move(k));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return keys(a) == keys(b);
}

}  // namespace schemaref
