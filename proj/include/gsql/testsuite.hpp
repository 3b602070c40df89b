#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsql/database.hpp"
#include "gsql/executor.hpp"
#include "gsql/query_model.hpp"

namespace gsql {

// ---- neighbors -----------------------------------------------------------

enum class EditKind {
  kOpSwap,
  kLiteral,
  kAggregator,
  kDistinct,
  kOrderDirection,
  kLimit,
  kAndOr,
  kDropPredicate,
  kSiblingColumn,
};
inline constexpr int kEditKindCount = 9;
std::string_view edit_kind_name(EditKind kind);

struct Neighbor {
  Query query;
  std::string sql;  // canonical print
  EditKind edit = EditKind::kOpSwap;
};

struct NeighborSet {
  Query gold;
  std::vector<Neighbor> neighbors;
  std::uint64_t seed = 0;
};

class NoNeighborsPossible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every distinct single-edit neighbor that reparses on `schema`, in a fixed
// catalog order. Never contains the gold itself. DISTINCT toggles are
// skipped where duplicates cannot reach the output; `original` (optional)
// lets that test see the columns the fuzzer keeps unique.
std::vector<Neighbor> enumerate_neighbors(const Query& gold, const Schema& schema,
                                          const std::vector<EditKind>& edits = {},
                                          const DatabaseInstance* original = nullptr);

// Seeded shuffle of the enumeration, capped at `count`. Throws
// NoNeighborsPossible when the catalog yields nothing.
NeighborSet generate_neighbors(const Query& gold, const Schema& schema, int count,
                               std::uint64_t seed, const std::vector<EditKind>& edits = {},
                               const DatabaseInstance* original = nullptr);

// Disjoint construction and held-out sets drawn alternately from one
// shuffled pool of single edits. A short construction side is padded with
// two-edit neighbors.
struct NeighborSplit {
  NeighborSet construction;
  NeighborSet heldout;
};
NeighborSplit split_neighbors(const Query& gold, const Schema& schema, int construction_count,
                              int heldout_count, std::uint64_t seed,
                              const DatabaseInstance* original = nullptr);

// ---- fuzzing -------------------------------------------------------------

struct FuzzConfig {
  int row_cap = 100;
  double hint_mass = 0.3;           // probability a hinted cell takes a hint value
  double widen_probability = 0.5;   // integer hint column becomes real
  double null_probability = 0.05;   // non-key cells
  double pool_probability = 0.3;    // numeric cells copied from the original column
  double text_pool_probability = 0.9;
};

// Samples a database for `schema`. `original` (optional) supplies value
// pools and the all-unique test for identifier-like columns.
DatabaseInstance fuzz_database(const Schema& schema, const std::vector<ConstantHint>& hints,
                               std::uint64_t seed, const FuzzConfig& config = {},
                               const DatabaseInstance* original = nullptr);

// True when the original column is all-unique and its name contains
// "name", "id" or "phone".
bool wants_unique_values(const ColumnId& column, const DatabaseInstance* original);

// ---- suites --------------------------------------------------------------

struct SuiteConfig {
  int max_dbs = 5;
  int max_attempts = 500;
  int nonempty_attempts = 100;
  int neighbors = 40;
  int heldout_neighbors = 40;
  std::uint64_t seed = 0;
  double time_limit = kMultiDbTimeLimit;
  bool count_one_as_empty = false;
  bool prune = true;
  FuzzConfig fuzz;
};

struct SuiteDatabase {
  DatabaseInstance db;
  Denotation gold;
  std::uint64_t seed = 0;
};

struct TestSuite {
  std::string query_id;
  std::string gold_sql;
  std::vector<SuiteDatabase> databases;
  std::vector<std::string> neighbor_sql;     // construction neighbors
  // Per construction neighbor: index of a suite database distinguishing it
  // from the gold, or -1.
  std::vector<int> distinguished_by;
  bool nonempty_found = false;
  int attempts = 0;
  double build_seconds = 0;  // never serialized
  std::uint64_t seed = 0;
};

// The database distinguishes the pair: the neighbor fails where the gold
// succeeds, or both succeed with denotations that differ and are not both
// empty under the gold's emptiness rule.
bool distinguishes(const ExecutionOutcome& gold, const ExecutionOutcome& neighbor,
                   const Query& gold_query, bool count_one_as_empty = false);

// Phase 1 looks for a database with non-empty gold output; phase 2 keeps a
// sampled database only when it distinguishes a new pair. A final pass drops
// databases whose pairs are all covered by the others.
TestSuite build_suite(const std::string& query_id, const Query& gold, const NeighborSet& neighbors,
                      const DatabaseInstance& original, const SuiteConfig& config,
                      const Executor& executor);

struct SuiteStatsRow {
  std::string query_id;
  int databases = 0;
  bool nonempty = false;
  int heldout = 0;
  int covered = 0;
  std::vector<std::string> uncovered;  // held-out neighbors no database separates
};

struct SuiteStats {
  double no_empty = 0;  // percent
  double cover = 0;     // percent
  double tests = 0;     // databases per suite
  double time = 0;      // seconds per suite
  std::uint64_t size = 0;  // bytes
  int suites = 0;
  int heldout_total = 0;
  int heldout_covered = 0;
  std::vector<SuiteStatsRow> rows;
};

SuiteStats suite_stats(const std::vector<TestSuite>& suites, const std::vector<Query>& golds,
                       const std::vector<NeighborSet>& heldout, const Executor& executor,
                       double time_limit, bool count_one_as_empty = false);

std::string render_suite_stats(const SuiteStats& stats, const std::string& label = "Our");
nlohmann::json suite_stats_to_json(const SuiteStats& stats);

// On-disk layout: <dir>/db_NNN.sqlite, gold_NNN.json, manifest.json.
void save_suite(const TestSuite& suite, const std::filesystem::path& dir,
                const nlohmann::json& extra_manifest = nlohmann::json::object());
TestSuite load_suite(const std::filesystem::path& dir, const Schema& schema);

}  // namespace gsql
