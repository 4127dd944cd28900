#pragma once

#include <optional>
#include <string>
#include <vector>

#include "schemaref/schema.hpp"
#include "schemaref/verifier.hpp"
#include "schemaref/view_layer.hpp"

namespace schemaref {

enum class Provenance { Kept, Demoted, Reverted, Propagated };

const char* to_string(Provenance p);

struct PlanEntry {
  ColumnId column;
  std::string qualified_name;  ///< original `table.column`
  std::string original;
  std::string final_name;
  Provenance provenance = Provenance::Kept;
  std::optional<double> delta;  ///< Δ of the final name; empty when reverted or propagated
  std::string note;
};

struct DemotionEvent {
  int iteration = 0;
  ColumnId loser;
  ColumnId winner;
  std::string from;
  std::string to;  ///< equals the original name on a revert
  double loser_delta = 0;
  std::optional<double> winner_delta;  ///< empty when the winner kept its original name
  bool reverted = false;
};

/// Committed decisions after collision handling (and, later, propagation).
struct ConflictPlan {
  std::vector<PlanEntry> entries;  ///< column order
  int iterations = 0;              ///< collision-resolution passes used
  bool revert_pass = false;        ///< the final revert pass changed something
  std::vector<DemotionEvent> events;
  std::vector<PropagationRecord> propagation;

  /// Entries whose final name differs from the original.
  RefinementMapping mapping() const;
  std::size_t renamed_count() const;
  const PlanEntry* find(ColumnId column) const;
};

inline constexpr int kMaxConflictIterations = 2;

/// Within-scope duplicate targets: the higher Δ keeps its name (ties go to
/// the smaller (table, column)); a column that kept its original name always
/// wins. The loser falls back to its next runner-up that collides with
/// nothing, else reverts. At most two passes, then a revert pass until the
/// mapping is admissible.
ConflictPlan resolve(const std::vector<RefinementDecision>& decisions, const SchemaModel& schema);

/// List-colouring style feasibility instance: pick one name per node from
/// its list, distinct across edges, forced nodes off their original name.
struct CrdInstance {
  std::vector<std::string> original;
  std::vector<std::vector<std::string>> lists;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<bool> forced;
};

struct CrdResult {
  bool feasible = false;
  std::vector<std::string> witness;
};

inline constexpr double kCrdAssignmentLimit = 1e6;

/// Exhaustive search; throws when the product of list sizes exceeds 10⁶.
CrdResult crd_feasible_bruteforce(const CrdInstance& instance);

/// True when `assignment` meets list membership, edge distinctness and
/// forced renames.
bool crd_check(const CrdInstance& instance, const std::vector<std::string>& assignment);

/// Instance over every schema column: committed columns may take their
/// selected name or a runner-up and are forced; every other column keeps
/// its current name. Edges join pairs that would conflict on equal names.
CrdInstance induced_crd_instance(const std::vector<RefinementDecision>& decisions, const SchemaModel& schema);

}  // namespace schemaref
