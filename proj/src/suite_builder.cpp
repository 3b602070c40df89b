#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>

#include "gsql/testsuite.hpp"

namespace gsql {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool nonempty_gold(const ExecutionOutcome& outcome, const Query& gold, bool count_one) {
  const Denotation* d = denotation_of(outcome);
  return d && !is_empty_output(*d, gold, count_one);
}

// Runs the gold (index 0) and the selected neighbors on one database.
std::vector<ExecutionOutcome> run_pairs(const std::string& gold_sql, const NeighborSet& neighbors,
                                        const std::vector<size_t>& which,
                                        const DatabaseInstance& db, double time_limit,
                                        const Executor& executor) {
  std::vector<ExecRequest> requests;
  requests.push_back({gold_sql, &db, time_limit});
  for (size_t i : which) requests.push_back({neighbors.neighbors[i].sql, &db, time_limit});
  return executor.execute_batch(requests);
}

struct Kept {
  DatabaseInstance db;
  Denotation gold;
  std::uint64_t seed = 0;
  std::set<size_t> pairs;  // construction neighbors this database distinguishes
  bool nonempty = false;
  bool pinned = false;
};

}  // namespace

bool distinguishes(const ExecutionOutcome& gold, const ExecutionOutcome& neighbor,
                   const Query& gold_query, bool count_one_as_empty) {
  const Denotation* g = denotation_of(gold);
  if (!g) return false;
  const Denotation* n = denotation_of(neighbor);
  if (!n) return true;
  if (compare(*g, *n)) return false;
  return !(is_empty_output(*g, gold_query, count_one_as_empty) &&
           is_empty_output(*n, gold_query, count_one_as_empty));
}

TestSuite build_suite(const std::string& query_id, const Query& gold, const NeighborSet& neighbors,
                      const DatabaseInstance& original, const SuiteConfig& config,
                      const Executor& executor) {
  const auto start = std::chrono::steady_clock::now();
  const Schema& schema = original.schema();
  const std::string gold_sql = print_query(gold);
  const auto hints = extract_constants(gold);
  const std::uint64_t base = config.seed ^ fnv1a(query_id);

  TestSuite suite;
  suite.query_id = query_id;
  suite.gold_sql = gold_sql;
  suite.seed = base;
  for (const auto& n : neighbors.neighbors) suite.neighbor_sql.push_back(n.sql);

  const size_t pair_count = neighbors.neighbors.size();
  std::vector<size_t> all(pair_count);
  for (size_t i = 0; i < pair_count; ++i) all[i] = i;
  std::vector<bool> covered(pair_count, false);
  size_t remaining = pair_count;

  std::vector<Kept> kept;
  auto keep = [&](DatabaseInstance db, const ExecutionOutcome& gold_outcome, std::uint64_t seed,
                  bool pinned) {
    Kept k{std::move(db), *denotation_of(gold_outcome), seed, {}, false, pinned};
    k.nonempty = !is_empty_output(k.gold, gold, config.count_one_as_empty);
    const auto outcomes = run_pairs(gold_sql, neighbors, all, k.db, config.time_limit, executor);
    for (size_t i = 0; i < pair_count; ++i) {
      if (distinguishes(outcomes[0], outcomes[i + 1], gold, config.count_one_as_empty)) {
        k.pairs.insert(i);
        if (!covered[i]) {
          covered[i] = true;
          --remaining;
        }
      }
    }
    kept.push_back(std::move(k));
  };

  int attempt = 0;
  auto sample = [&](std::uint64_t* seed) {
    *seed = splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(attempt)));
    ++attempt;
    return fuzz_database(schema, hints, *seed, config.fuzz, &original);
  };

  // Phase 1: a database on which the gold output is not empty.
  std::optional<std::pair<DatabaseInstance, std::uint64_t>> fallback;
  ExecutionOutcome fallback_outcome = ExecError{"none"};
  const int phase1 = std::min(config.nonempty_attempts, config.max_attempts);
  while (attempt < phase1) {
    std::uint64_t seed = 0;
    DatabaseInstance db = sample(&seed);
    ExecutionOutcome outcome = executor.execute(gold_sql, db, config.time_limit);
    if (nonempty_gold(outcome, gold, config.count_one_as_empty)) {
      suite.nonempty_found = true;
      keep(std::move(db), outcome, seed, true);
      break;
    }
    if (!fallback && is_success(outcome)) {
      fallback.emplace(std::move(db), seed);
      fallback_outcome = std::move(outcome);
    }
  }
  if (!suite.nonempty_found && fallback) {
    keep(std::move(fallback->first), fallback_outcome, fallback->second, true);
  }

  // Phase 2: keep a sample only if it separates a pair nobody separated yet.
  while (remaining > 0 && static_cast<int>(kept.size()) < config.max_dbs &&
         attempt < config.max_attempts) {
    std::uint64_t seed = 0;
    DatabaseInstance db = sample(&seed);
    std::vector<size_t> open;
    for (size_t i = 0; i < pair_count; ++i) {
      if (!covered[i]) open.push_back(i);
    }
    const auto outcomes = run_pairs(gold_sql, neighbors, open, db, config.time_limit, executor);
    if (!is_success(outcomes[0])) continue;
    bool fresh = false;
    for (size_t j = 0; j < open.size() && !fresh; ++j) {
      fresh = distinguishes(outcomes[0], outcomes[j + 1], gold, config.count_one_as_empty);
    }
    if (fresh) keep(std::move(db), outcomes[0], seed, false);
  }
  suite.attempts = attempt;

  // Drop databases whose pairs the others already cover. The phase-1
  // database stays unless another one has non-empty gold output too.
  if (config.prune) {
    bool changed = true;
    while (changed && kept.size() > 1) {
      changed = false;
      std::vector<size_t> order(kept.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (kept[a].pairs.size() != kept[b].pairs.size()) {
          return kept[a].pairs.size() < kept[b].pairs.size();
        }
        return a > b;
      });
      for (size_t victim : order) {
        std::set<size_t> others;
        bool other_nonempty = false;
        for (size_t j = 0; j < kept.size(); ++j) {
          if (j == victim) continue;
          others.insert(kept[j].pairs.begin(), kept[j].pairs.end());
          other_nonempty = other_nonempty || kept[j].nonempty;
        }
        if (!std::includes(others.begin(), others.end(), kept[victim].pairs.begin(),
                           kept[victim].pairs.end())) {
          continue;
        }
        if (kept[victim].nonempty && !other_nonempty) continue;
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(victim));
        changed = true;
        break;
      }
    }
  }

  suite.distinguished_by.assign(pair_count, -1);
  for (size_t d = 0; d < kept.size(); ++d) {
    for (size_t i : kept[d].pairs) {
      if (suite.distinguished_by[i] < 0) suite.distinguished_by[i] = static_cast<int>(d);
    }
    suite.databases.push_back({std::move(kept[d].db), std::move(kept[d].gold), kept[d].seed});
  }
  suite.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return suite;
}

SuiteStats suite_stats(const std::vector<TestSuite>& suites, const std::vector<Query>& golds,
                       const std::vector<NeighborSet>& heldout, const Executor& executor,
                       double time_limit, bool count_one_as_empty) {
  SuiteStats stats;
  stats.suites = static_cast<int>(suites.size());
  if (suites.empty()) return stats;
  int nonempty = 0;
  double dbs = 0;
  double seconds = 0;
  for (size_t s = 0; s < suites.size(); ++s) {
    const TestSuite& suite = suites[s];
    const Query& gold = golds.at(s);
    dbs += static_cast<double>(suite.databases.size());
    seconds += suite.build_seconds;
    bool any_nonempty = false;
    for (const auto& entry : suite.databases) {
      stats.size += entry.db.byte_size();
      any_nonempty = any_nonempty || !is_empty_output(entry.gold, gold, count_one_as_empty);
    }
    nonempty += any_nonempty ? 1 : 0;
    SuiteStatsRow row;
    row.query_id = suite.query_id;
    row.databases = static_cast<int>(suite.databases.size());
    row.nonempty = any_nonempty;

    if (s >= heldout.size()) {
      stats.rows.push_back(std::move(row));
      continue;
    }
    const auto& nbs = heldout[s].neighbors;
    std::vector<bool> hit(nbs.size(), false);
    for (const auto& entry : suite.databases) {
      std::vector<size_t> open;
      std::vector<ExecRequest> requests;
      for (size_t i = 0; i < nbs.size(); ++i) {
        if (hit[i]) continue;
        open.push_back(i);
        requests.push_back({nbs[i].sql, &entry.db, time_limit});
      }
      if (open.empty()) break;
      const auto outcomes = executor.execute_batch(requests);
      const ExecutionOutcome gold_outcome = ExecSuccess{entry.gold, 0};
      for (size_t j = 0; j < open.size(); ++j) {
        if (distinguishes(gold_outcome, outcomes[j], gold, count_one_as_empty)) hit[open[j]] = true;
      }
    }
    row.heldout = static_cast<int>(nbs.size());
    row.covered = static_cast<int>(std::count(hit.begin(), hit.end(), true));
    for (size_t i = 0; i < nbs.size(); ++i) {
      if (!hit[i]) row.uncovered.push_back(nbs[i].sql);
    }
    stats.heldout_total += row.heldout;
    stats.heldout_covered += row.covered;
    stats.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(suites.size());
  stats.no_empty = 100.0 * nonempty / n;
  stats.cover = stats.heldout_total ? 100.0 * stats.heldout_covered / stats.heldout_total : 100.0;
  stats.tests = dbs / n;
  stats.time = seconds / n;
  return stats;
}

namespace {

std::string human_bytes(std::uint64_t bytes) {
  char buf[32];
  if (bytes >= (1u << 20)) {
    std::snprintf(buf, sizeof buf, "%.1fM", static_cast<double>(bytes) / (1u << 20));
  } else if (bytes >= (1u << 10)) {
    std::snprintf(buf, sizeof buf, "%.1fK", static_cast<double>(bytes) / (1u << 10));
  } else {
    std::snprintf(buf, sizeof buf, "%lluB", static_cast<unsigned long long>(bytes));
  }
  return buf;
}

}  // namespace

std::string render_suite_stats(const SuiteStats& stats, const std::string& label) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-10s %8s %8s %8s %8s %8s\n", "", "NoEmpty", "Cover", "Tests",
                "Time", "Size");
  out += line;
  std::snprintf(line, sizeof line, "%-10s %8.1f %8.1f %8.1f %8.2f %8s\n", label.c_str(),
                stats.no_empty, stats.cover, stats.tests, stats.time,
                human_bytes(stats.size).c_str());
  out += line;
  return out;
}

nlohmann::json suite_stats_to_json(const SuiteStats& stats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : stats.rows) {
    rows.push_back({{"query_id", r.query_id},
                    {"databases", r.databases},
                    {"nonempty", r.nonempty},
                    {"heldout", r.heldout},
                    {"covered", r.covered},
                    {"uncovered", r.uncovered}});
  }
  return {{"NoEmpty", stats.no_empty},
          {"Cover", stats.cover},
          {"Tests", stats.tests},
          {"Time", stats.time},
          {"Size", stats.size},
          {"suites", stats.suites},
          {"heldout_total", stats.heldout_total},
          {"heldout_covered", stats.heldout_covered},
          {"per_query", rows}};
}

}  // namespace gsql
