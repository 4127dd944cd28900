#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/backend.hpp"
#include "schemaref/exec.hpp"
#include "schemaref/schema.hpp"

namespace schemaref {

struct WorkloadItem {
  std::size_t index = 0;  ///< position in the ingested workload
  std::string question;
  std::string gold_sql;
  std::string db_id;
  std::shared_ptr<const ResultSet> gold;  ///< gold result on the base schema
};

struct IngestOptions {
  bool hard_fail = false;             ///< throw on the first failing item
  double max_failure_fraction = 0.5;  ///< abort when more items fail
  std::chrono::milliseconds timeout = kDefaultTimeout;
};

struct DroppedItem {
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::vector<WorkloadItem> items;
  std::vector<DroppedItem> dropped;
  std::size_t other_database = 0;  ///< records for a different db_id
  std::vector<std::string> warnings;
};

/// Reads JSON Lines (`question`, `gold_sql`, `db_id`) or a Spider/BIRD JSON
/// array (`query` or `SQL` as the gold field). Only records whose db_id is
/// empty or equals schema.db_id() are kept; each is validated by executing
/// its gold SQL against `db_path`.
IngestReport ingest_workload(const std::filesystem::path& workload_path, const SchemaModel& schema,
                             const std::filesystem::path& db_path, const IngestOptions& options = {});

/// Q(c): workload item indices whose gold SQL references each column.
class ColumnQueryIndex {
public:
  ColumnQueryIndex(const std::vector<WorkloadItem>& items, const SchemaModel& schema);

  /// Items touching `column`, in workload order.
  std::vector<WorkloadItem> items_for(ColumnId column) const;
  std::size_t count(ColumnId column) const;
  const std::vector<ColumnId>& columns_of(std::size_t item_position) const { return per_item_.at(item_position); }

private:
  std::vector<WorkloadItem> items_;
  std::map<ColumnId, std::vector<std::size_t>> index_;
  std::vector<std::vector<ColumnId>> per_item_;
};

/// Where predictions run and what the backend is shown.
struct EvalContext {
  ExecutableSchema target;
  SchemaModel visible;  ///< schema as named for the backend
  const DataSource* data = nullptr;
  std::size_t samples_per_table = 5;
  std::chrono::milliseconds timeout = kDefaultTimeout;
  std::size_t parallelism = 1;
};

struct ItemOutcome {
  std::size_t item_index = 0;
  bool correct = false;
  std::string predicted_sql;
  ExecErrorKind error = ExecErrorKind::None;
  std::string message;  ///< backend or execution diagnostic
};

struct ExAccResult {
  double value = 0;
  std::vector<ItemOutcome> outcomes;  ///< in item order
};

/// True when `predicted` matches `gold`; comparison semantics follow the
/// gold query's ORDER BY.
bool prediction_matches(const ResultSet& predicted, const ResultSet& gold);

/// Fraction of items whose predicted SQL result equals the gold result.
/// Backend and execution failures count as incorrect. Throws on empty items.
ExAccResult exacc(Text2SqlBackend& model, const EvalContext& ctx, const std::vector<WorkloadItem>& items);

struct QualityReport {
  std::vector<std::pair<std::string, double>> per_model;  ///< (model id, ExAcc)
  double quality = 0;
  std::optional<double> recovery_rate;
};

/// Mean ExAcc over models; throws on an empty model list.
QualityReport quality(const std::vector<std::shared_ptr<Text2SqlBackend>>& models, const EvalContext& ctx,
                      const std::vector<WorkloadItem>& items);

/// (refined − degraded) / (clean − degraded) × 100; nullopt when clean equals
/// degraded.
std::optional<double> recovery_rate(double refined, double degraded, double clean);

}  // namespace schemaref
