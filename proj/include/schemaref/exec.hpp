#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "schemaref/sqlite_db.hpp"
#include "schemaref/view_layer.hpp"

namespace schemaref {

inline constexpr std::size_t kRowCap = 100000;
inline constexpr double kNumericTolerance = 1e-6;
inline constexpr std::chrono::milliseconds kDefaultTimeout{30000};

struct Blob {
  std::string bytes;
  bool operator==(const Blob&) const = default;
};

using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

struct ResultSet {
  std::size_t column_count = 0;
  std::vector<std::vector<Value>> rows;
  bool ordered = false;    ///< top-level ORDER BY present
  bool truncated = false;  ///< row cap hit; never compares equal
};

enum class ExecErrorKind { None, Rejected, Syntax, MissingRelation, MissingColumn, Timeout, Runtime };

const char* to_string(ExecErrorKind kind);

struct ExecResult {
  std::optional<ResultSet> result;
  ExecErrorKind error = ExecErrorKind::None;
  std::string message;

  bool ok() const { return error == ExecErrorKind::None && result.has_value(); }
};

/// Evaluation context: the base database, optionally seen through a view
/// layer. Immutable and cheap to copy.
struct ExecutableSchema {
  std::filesystem::path db_path;
  std::shared_ptr<const ViewLayer> view_layer;

  static ExecutableSchema base(std::filesystem::path db_path) { return {std::move(db_path), nullptr}; }
};

/// One read-only connection bound to an ExecutableSchema. Not thread-safe;
/// give each worker its own session.
class Session {
public:
  explicit Session(const ExecutableSchema& schema);

  ExecResult execute(std::string_view sql, std::chrono::milliseconds timeout = kDefaultTimeout);

  sqlite::Connection& connection() { return conn_; }

private:
  sqlite::Connection conn_;
};

/// Opens a session, runs `sql`, closes it.
ExecResult execute(const ExecutableSchema& schema, std::string_view sql,
                   std::chrono::milliseconds timeout = kDefaultTimeout);

/// Ordered (either side) → sequence equality; otherwise multiset equality.
/// Numeric cells match within 1e-6 (multiset mode buckets numerics to 1e-6
/// so the comparison stays transitive). NULL matches only NULL.
bool results_equal(const ResultSet& a, const ResultSet& b);

}  // namespace schemaref
