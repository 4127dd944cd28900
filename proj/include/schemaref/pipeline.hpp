#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/backend.hpp"
#include "schemaref/candidate_gen.hpp"
#include "schemaref/llm_client.hpp"
#include "schemaref/reports.hpp"
#include "schemaref/screening.hpp"

namespace schemaref {

struct BackendSpec {
  std::string id;
  std::string kind = "mock";  ///< mock | llm
  ChatEndpoint endpoint;
  int max_in_flight = 4;
};

struct RunConfig {
  std::vector<std::filesystem::path> databases;
  std::filesystem::path workload;
  std::vector<std::filesystem::path> clean_databases;  ///< optional, parallel to `databases`
  std::filesystem::path clean_workload;
  std::string domain;  ///< used when no `<db stem>.domain.txt` sits beside a database
  std::vector<std::string> verifiers{"mock"};
  std::string screener = "rules";
  std::string generator = "dictionary";
  std::filesystem::path dictionary;  ///< extra abbreviations for the dictionary generator
  std::map<std::string, BackendSpec> backends;
  std::size_t k = kDefaultCandidateCount;
  std::size_t n_s = kDefaultTargetSamples;
  std::size_t samples_per_table = 5;
  double tau_min = 0.05;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output;
  std::size_t parallelism = 4;
  std::filesystem::path cache_dir;  ///< defaults to <output>/cache
  bool replay_only = false;
  std::chrono::milliseconds timeout{30000};

  std::filesystem::path cache_file() const;
  /// Throws describing the first invalid field.
  void validate() const;
  /// `key = value` lines, resolved relative to the file's directory.
  std::string to_text() const;
};

/// Parses the key = value format; relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& file);
/// Applies one `key=value` override.
void apply_override(RunConfig& config, const std::string& assignment, const std::filesystem::path& base_dir = {});

struct TraceEvent {
  std::string db_id;
  std::string phase;
  std::string event;  ///< enter | exit
  std::string detail;
};

struct PipelineResult {
  int exit_code = 0;  ///< 0 ok, 2 equivalence discrepancies, 1 hard error
  std::string error;
  std::string last_good_phase;
  std::vector<TraceEvent> trace;
  RunReport report;
  std::size_t backend_calls = 0;  ///< uncached inferences
};

/// Backends named by the config, each behind the shared response cache.
std::vector<std::shared_ptr<CachingBackend>> make_verifiers(const RunConfig& config,
                                                            std::shared_ptr<ResponseCache> cache,
                                                            bool replay_only);
std::unique_ptr<Screener> make_screener(const RunConfig& config);
std::unique_ptr<Generator> make_generator(const RunConfig& config);

/// The whole refinement for every configured database. Never throws for
/// phase failures: the error, exit code and last good phase are returned
/// and recorded in status.json.
PipelineResult run_pipeline(const RunConfig& config);

struct SweepRow {
  double tau = 0;
  std::string db_id;  ///< empty for the all-database total
  std::size_t committed = 0;  ///< decisions meeting tau
  std::size_t renamed = 0;    ///< after conflict resolution and propagation rollback
  std::optional<double> exacc;  ///< cached replay; empty when a response is missing
  std::size_t cache_misses = 0;
};

/// Recomputes decisions per tau from a finished run's score logs without
/// new inference. Throws when the run's artifacts are missing.
std::vector<SweepRow> sweep_tau(const RunConfig& config, const std::vector<double>& taus);

}  // namespace schemaref
