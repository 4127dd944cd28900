#pragma once

#include <sqlite3.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace schemaref::sqlite {

enum class OpenMode { ReadOnly, ReadWriteCreate };

class Statement;

/// Owning handle for one sqlite3 connection. Move-only.
class Connection {
public:
  static Connection open(const std::filesystem::path& path, OpenMode mode);
  static Connection open_memory();

  Connection(Connection&&) noexcept = default;
  Connection& operator=(Connection&&) noexcept = default;

  sqlite3* get() const { return db_.get(); }

  /// Runs one or more statements, throwing on error.
  void exec(const std::string& sql);

  /// Attaches `path` read-only under `schema_name`.
  void attach_read_only(const std::filesystem::path& path, std::string_view schema_name);

  Statement prepare(std::string_view sql);

  std::string last_error() const;

private:
  struct Closer {
    void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
  };
  explicit Connection(sqlite3* db) : db_(db) {}
  std::unique_ptr<sqlite3, Closer> db_;
};

/// Prepared statement; step() returns true while rows are available.
class Statement {
public:
  Statement(sqlite3* db, sqlite3_stmt* stmt, std::string tail) : db_(db), stmt_(stmt), tail_(std::move(tail)) {}
  Statement(Statement&&) noexcept = default;
  Statement& operator=(Statement&&) noexcept = default;

  bool step();
  void bind(int index, std::string_view text);
  void bind(int index, std::int64_t value);

  int column_count() const { return sqlite3_column_count(stmt_.get()); }
  int column_type(int i) const { return sqlite3_column_type(stmt_.get(), i); }
  std::int64_t column_int(int i) const { return sqlite3_column_int64(stmt_.get(), i); }
  double column_double(int i) const { return sqlite3_column_double(stmt_.get(), i); }
  std::string column_text(int i) const;
  std::optional<std::string> column_text_or_null(int i) const;
  std::string column_blob(int i) const;
  std::string column_name(int i) const;

  bool read_only() const { return sqlite3_stmt_readonly(stmt_.get()) != 0; }
  const std::string& tail() const { return tail_; }
  sqlite3_stmt* get() const { return stmt_.get(); }

private:
  struct Finalizer {
    void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
  };
  sqlite3* db_;
  std::unique_ptr<sqlite3_stmt, Finalizer> stmt_;
  std::string tail_;
};

/// Installs a progress handler that interrupts statements once `deadline`
/// passes; removed on destruction.
class DeadlineGuard {
public:
  DeadlineGuard(sqlite3* db, std::chrono::steady_clock::time_point deadline);
  ~DeadlineGuard();
  DeadlineGuard(const DeadlineGuard&) = delete;
  DeadlineGuard& operator=(const DeadlineGuard&) = delete;
  bool expired() const { return expired_; }

private:
  static int on_progress(void* self);
  sqlite3* db_;
  std::chrono::steady_clock::time_point deadline_;
  bool expired_ = false;
};

}  // namespace schemaref::sqlite
