#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "schemaref/conflict.hpp"
#include "schemaref/screening.hpp"
#include "schemaref/synthesis.hpp"
#include "schemaref/verifier.hpp"
#include "schemaref/workload.hpp"

namespace schemaref {

struct FunnelReport {
  std::size_t m = 0;          ///< all columns
  std::size_t excluded = 0;   ///< structural exclusions
  std::size_t unflagged = 0;  ///< screened, not flagged
  std::size_t n = 0;          ///< flagged
  std::size_t skipped = 0;    ///< flagged with an empty Q(c)
  std::size_t retained = 0;
  std::size_t n_r = 0;  ///< renamed after conflict resolution
  double exclusion_rate = 0;  ///< 1 − n/m
  double compression = 0;     ///< n_r/m
  std::optional<double> mean_delta;  ///< over the n_r renamed columns

  bool identity_holds() const { return m == excluded + unflagged + n; }
};

/// Rates from raw counts; `deltas` holds the Δ of each renamed column.
FunnelReport make_funnel(std::size_t m, std::size_t excluded, std::size_t n, std::size_t n_r,
                         const std::vector<double>& deltas);

FunnelReport funnel(const SchemaModel& schema, const ScreeningResult& screening,
                    const std::vector<RefinementDecision>& decisions, const ConflictPlan& plan);

enum class Flip { CorrectToCorrect, CorrectToWrong, WrongToCorrect, WrongToWrong };

struct FlipReport {
  std::size_t cc = 0, cw = 0, wc = 0, ww = 0;
  std::optional<double> repair_ratio;  ///< W→C : C→W; empty when C→W is 0
  std::vector<std::pair<std::size_t, Flip>> per_query;

  std::size_t total() const { return cc + cw + wc + ww; }
};

/// Pairs outcomes by query id; throws when the two sides cover different
/// queries.
FlipReport flips(const std::vector<std::pair<std::size_t, bool>>& before,
                 const std::vector<std::pair<std::size_t, bool>>& after);
FlipReport flips(const std::vector<ItemOutcome>& before, const std::vector<ItemOutcome>& after);

struct CoverageRow {
  std::string db_id;
  std::size_t n_r = 0;
  std::size_t m = 0;
  double coverage = 0;          ///< n_r / m
  std::optional<double> delta;  ///< ExAcc after − before
  bool consistent = true;       ///< false when n_r = 0 but Δ ≠ 0
};

CoverageRow coverage(std::string db_id, std::size_t n_r, std::size_t m, std::optional<double> delta);

struct DatabaseReport {
  std::string db_id;
  FunnelReport funnel;
  std::optional<QualityReport> before;
  std::optional<QualityReport> after;
  std::optional<QualityReport> clean;
  std::optional<double> recovery_rate;
  std::optional<FlipReport> flips;  ///< first verifier model
  CoverageRow coverage;
  std::size_t equivalence_checked = 0;
  std::size_t equivalence_discrepancies = 0;
  std::size_t predicted_inferences = 0;
  std::size_t logged_inferences = 0;
  std::size_t invoked_inferences = 0;  ///< backend infer() calls during verification
  std::vector<RefinementDecision> decisions;
  ConflictPlan plan;
};

struct RunReport {
  std::vector<DatabaseReport> databases;
  FunnelReport total;  ///< summed over databases
};

RunReport aggregate(std::vector<DatabaseReport> databases);

nlohmann::json to_json(const FunnelReport& f);
nlohmann::json to_json(const FlipReport& f);
nlohmann::json to_json(const RefinementDecision& d);
nlohmann::json to_json(const ConflictPlan& plan);
nlohmann::json to_json(const RunReport& report);

/// Aligned plain-text tables from the JSON form of a RunReport.
std::string render_text(const nlohmann::json& report);

}  // namespace schemaref
