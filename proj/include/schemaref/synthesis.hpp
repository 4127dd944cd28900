#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "schemaref/conflict.hpp"
#include "schemaref/exec.hpp"
#include "schemaref/schema.hpp"
#include "schemaref/view_layer.hpp"
#include "schemaref/workload.hpp"

namespace schemaref {

/// Every FK referencing a renamed primary key takes the key's new name. A
/// key whose propagation would collide is reverted together with its FKs.
ConflictPlan propagate_pk_renames(const ConflictPlan& plan, const SchemaModel& schema);

/// Writes a fresh view database at `view_db` recording one aliasing view
/// per base table, then checks that every view builds over `base_db`.
/// Throws with the offending statement when one does not.
ViewLayer synthesize_views(const ConflictPlan& plan, const SchemaModel& schema, const std::filesystem::path& base_db,
                           const std::filesystem::path& view_db);

/// Stand-alone script: ATTACH of the base read-only, then the views.
void write_views_sql(const ViewLayer& layer, const std::filesystem::path& base_db, const std::filesystem::path& out);

/// Column → final name with provenance and Δ.
void write_mapping_json(const ConflictPlan& plan, const SchemaModel& schema, const std::filesystem::path& out);

struct LoadedViewLayer {
  ViewLayer layer;
  std::filesystem::path base_db;
  std::string base_sha256;  ///< hash recorded at synthesis time
};

/// Reads a view database written by synthesize_views. `schema` is the base
/// schema the mapping refers to.
LoadedViewLayer load_view_layer(const std::filesystem::path& view_db, const SchemaModel& schema);

struct Discrepancy {
  std::size_t item = 0;
  std::string gold_sql;
  std::string rewritten_sql;
  std::string reason;
};

struct EquivalenceReport {
  std::size_t checked = 0;
  std::vector<Discrepancy> discrepancies;  ///< item order

  bool ok() const { return discrepancies.empty(); }
};

/// Runs each gold query on the base, rewrites its identifiers through the
/// layer's mapping, runs the rewrite on the view layer and compares.
EquivalenceReport equivalence_check(const ViewLayer& layer, const std::vector<WorkloadItem>& workload,
                                    const SchemaModel& schema, const std::filesystem::path& base_db,
                                    std::size_t parallelism = 1,
                                    std::chrono::milliseconds timeout = kDefaultTimeout);

}  // namespace schemaref
