#include "schemaref/sqlite_db.hpp"

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"

namespace schemaref::sqlite {

namespace {

std::string file_uri(const std::filesystem::path& path, bool read_only) {
  std::string uri = "file:";
  for (char c : std::filesystem::absolute(path).string()) {
    switch (c) {
      case '?': uri += "%3f"; break;
      case '#': uri += "%23"; break;
      case '%': uri += "%25"; break;
      default: uri += c;
    }
  }
  if (read_only) uri += "?mode=ro";
  return uri;
}

}  // namespace

Connection Connection::open(const std::filesystem::path& path, OpenMode mode) {
  const bool ro = mode == OpenMode::ReadOnly;
  if (ro && !std::filesystem::exists(path)) throw Error("database not found: " + path.string());
  int flags = SQLITE_OPEN_URI | SQLITE_OPEN_NOMUTEX;
  flags |= ro ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(file_uri(path, ro).c_str(), &raw, flags, nullptr);
  Connection conn(raw);
  if (rc != SQLITE_OK) {
    throw Error("cannot open database " + path.string() + ": " +
                (raw ? sqlite3_errmsg(raw) : sqlite3_errstr(rc)));
  }
  return conn;
}

Connection Connection::open_memory() {
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(":memory:", &raw, SQLITE_OPEN_READWRITE | SQLITE_OPEN_URI | SQLITE_OPEN_NOMUTEX, nullptr);
  Connection conn(raw);
  if (rc != SQLITE_OK) throw Error("cannot open in-memory database");
  return conn;
}

void Connection::exec(const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_.get(), sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(msg + " [in: " + sql + "]");
  }
}

void Connection::attach_read_only(const std::filesystem::path& path, std::string_view schema_name) {
  if (!std::filesystem::exists(path)) throw Error("database not found: " + path.string());
  exec("ATTACH DATABASE " + quote_literal(file_uri(path, true)) + " AS " + quote_identifier(schema_name));
}

Statement Connection::prepare(std::string_view sql) {
  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(db_.get(), sql.data(), static_cast<int>(sql.size()), &raw, &tail) != SQLITE_OK) {
    sqlite3_finalize(raw);
    throw Error(last_error());
  }
  std::string rest = tail ? std::string(tail, sql.data() + sql.size() - tail) : std::string();
  return Statement(db_.get(), raw, std::move(rest));
}

std::string Connection::last_error() const { return sqlite3_errmsg(db_.get()); }

bool Statement::step() {
  const int rc = sqlite3_step(stmt_.get());
  if (rc == SQLITE_ROW) return true;
  if (rc == SQLITE_DONE) return false;
  throw Error(sqlite3_errmsg(db_));
}

void Statement::bind(int index, std::string_view text) {
  sqlite3_bind_text(stmt_.get(), index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
}

void Statement::bind(int index, std::int64_t value) { sqlite3_bind_int64(stmt_.get(), index, value); }

std::string Statement::column_text(int i) const {
  const auto* p = sqlite3_column_text(stmt_.get(), i);
  const int n = sqlite3_column_bytes(stmt_.get(), i);
  return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(n)) : std::string();
}

std::optional<std::string> Statement::column_text_or_null(int i) const {
  if (column_type(i) == SQLITE_NULL) return std::nullopt;
  return column_text(i);
}

std::string Statement::column_blob(int i) const {
  const auto* p = sqlite3_column_blob(stmt_.get(), i);
  const int n = sqlite3_column_bytes(stmt_.get(), i);
  return p ? std::string(static_cast<const char*>(p), static_cast<std::size_t>(n)) : std::string();
}

std::string Statement::column_name(int i) const {
  const char* n = sqlite3_column_name(stmt_.get(), i);
  return n ? n : "";
}

DeadlineGuard::DeadlineGuard(sqlite3* db, std::chrono::steady_clock::time_point deadline)
    : db_(db), deadline_(deadline) {
  sqlite3_progress_handler(db_, 1000, &DeadlineGuard::on_progress, this);
}

DeadlineGuard::~DeadlineGuard() { sqlite3_progress_handler(db_, 0, nullptr, nullptr); }

int DeadlineGuard::on_progress(void* self) {
  auto* g = static_cast<DeadlineGuard*>(self);
  if (std::chrono::steady_clock::now() >= g->deadline_) {
    g->expired_ = true;
    return 1;
  }
  return 0;
}

}  // namespace schemaref::sqlite
