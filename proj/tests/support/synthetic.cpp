#include "synthetic.hpp"

#include <sqlite3.h>

#include <cmath>
#include <fstream>
#include <set>

#include "gsql/sql_lexer.hpp"

namespace gsql::testing {

namespace fs = std::filesystem;

namespace {

void exec_sql_file(const fs::path& sql_path, const fs::path& db_path) {
  std::ifstream in(sql_path);
  if (!in) throw std::runtime_error("missing " + sql_path.string());
  const std::string sql((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  fs::create_directories(db_path.parent_path());
  fs::remove(db_path);
  sqlite3* db = nullptr;
  if (sqlite3_open(db_path.c_str(), &db) != SQLITE_OK) throw std::runtime_error("cannot open db");
  char* msg = nullptr;
  const int rc = sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &msg);
  const std::string error = msg ? msg : "";
  sqlite3_free(msg);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw std::runtime_error(sql_path.string() + ": " + error);
}

template <class T>
void shuffle(std::vector<T>& v, std::uint64_t seed) {
  SplitRng rng(seed);
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::string normalized(const std::string& sql) { return detokenize_sql(tokenize_sql(sql)); }

bool reachable(const std::vector<WeightedCandidate>& cands, const std::string& target) {
  const NgramScorer scorer = candidate_scorer(cands, 1e-9);
  const std::string want = normalized(target);
  const auto result = cab_search(scorer, CabSchedule::preset("t5"), [&](const Hypothesis& h) {
    return hypothesis_text(scorer, h) == want;
  });
  return result.selected.has_value();
}

}  // namespace

void materialize_fixture(const fs::path& fixtures, const fs::path& out) {
  fs::create_directories(out);
  for (const char* name : {"tables.json", "examples.json"}) {
    fs::copy_file(fixtures / name, out / name, fs::copy_options::overwrite_existing);
  }
  for (const auto& schema : load_spider_tables(fixtures / "tables.json")) {
    exec_sql_file(fixtures / (schema.db_id + ".sql"), database_path(out / "database", schema.db_id));
  }
}

std::vector<PlantedQuestion> make_candidates(
    const Dataset& dataset, const Executor& executor, const SyntheticOptions& options,
    std::vector<std::pair<std::string, std::vector<WeightedCandidate>>>* rows) {
  std::vector<PlantedQuestion> planted;
  const double limit = 10.0;
  const auto& examples = dataset.examples();
  for (size_t qi = 0; qi < examples.size(); ++qi) {
    const auto& ex = examples[qi];
    const DatabaseInstance& original = dataset.database(ex.db_id);
    const Schema& schema = original.schema();
    const Query gold = parse_query(ex.query, schema);
    const std::string gold_sql = print_query(gold);
    const ExecutionOutcome gold_out = executor.execute(gold_sql, original, limit);
    const Denotation* expected = denotation_of(gold_out);
    if (!expected) throw std::runtime_error(ex.question_id + ": gold fails on the original");

    auto same_on_original = [&](const std::string& sql) {
      const ExecutionOutcome o = executor.execute(sql, original, limit);
      const Denotation* d = denotation_of(o);
      return d && compare(*d, *expected);
    };

    int rank = options.rank_cycle[qi % options.rank_cycle.size()];
    const size_t wanted = static_cast<size_t>(rank + options.tail + 2);

    // Wrong-on-original distractors, single edits first, then double edits.
    std::vector<std::string> wrong, same;
    std::set<std::string> seen{gold_sql};
    const auto first = enumerate_neighbors(gold, schema, {}, &original);
    for (const auto& n : first) {
      if (!seen.insert(n.sql).second) continue;
      (same_on_original(n.sql) ? same : wrong).push_back(n.sql);
    }
    shuffle(wrong, options.seed ^ (qi * 0x9e3779b97f4a7c15ULL));
    if (wrong.size() < wanted) {
      std::vector<std::string> second;
      for (const auto& n : first) {
        for (const auto& m : enumerate_neighbors(n.query, schema, {}, &original)) {
          if (!seen.insert(m.sql).second) continue;
          if (!same_on_original(m.sql)) second.push_back(m.sql);
        }
        if (wrong.size() + second.size() >= 4 * wanted) break;
      }
      shuffle(second, options.seed ^ (qi * 0xbf58476d1ce4e5b9ULL));
      wrong.insert(wrong.end(), second.begin(), second.end());
    }

    // A false positive must differ from the gold on some fuzzed database.
    PlantedQuestion p;
    p.question_id = ex.question_id;
    const auto hints = extract_constants(gold);
    for (const auto& candidate : same) {
      bool differs = false;
      for (int s = 0; s < options.fuzz_probes && !differs; ++s) {
        const DatabaseInstance db = fuzz_database(schema, hints, options.seed * 1000 + s, {}, &original);
        differs = distinguishes(executor.execute(gold_sql, db, limit),
                                executor.execute(candidate, db, limit), gold);
      }
      if (differs) {
        p.false_positive = true;
        p.false_positive_sql = candidate;
        break;
      }
    }
    if (p.false_positive) rank = std::max(rank, 2);
    rank = std::min<int>(rank, static_cast<int>(wrong.size()) + 1 + p.false_positive);

    std::vector<WeightedCandidate> cands;
    while (true) {
      std::vector<std::string> order;
      if (p.false_positive) order.push_back(p.false_positive_sql);
      size_t next = 0;
      while (static_cast<int>(order.size()) < rank - 1 && next < wrong.size()) order.push_back(wrong[next++]);
      order.push_back(gold_sql);
      for (int t = 0; t < options.tail && next < wrong.size(); ++t) order.push_back(wrong[next++]);
      cands.clear();
      for (size_t k = 0; k < order.size(); ++k) {
        cands.push_back({order[k], std::pow(options.ratio, static_cast<double>(k))});
      }
      if (reachable(cands, gold_sql) || rank <= 1 + static_cast<int>(p.false_positive)) break;
      --rank;
    }
    p.gold_rank = rank;
    p.candidates = static_cast<int>(cands.size());
    planted.push_back(p);
    if (rows) rows->emplace_back(ex.question_id, std::move(cands));
  }
  return planted;
}

std::vector<PlantedQuestion> write_demo_corpus(const fs::path& fixtures, const fs::path& out,
                                               const SyntheticOptions& options) {
  materialize_fixture(fixtures, out);
  DatasetConfig dc{out / "examples.json", out / "tables.json", out / "database", "multi"};
  const Dataset dataset = Dataset::load(dc);
  ExecutorOptions eo;
  eo.isolation = Isolation::kInProcess;
  const Executor executor(eo);
  std::vector<std::pair<std::string, std::vector<WeightedCandidate>>> rows;
  const auto planted = make_candidates(dataset, executor, options, &rows);
  save_candidates(out / "candidates.jsonl", rows);

  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : planted) {
    pj.push_back({{"question_id", p.question_id},
                  {"gold_rank", p.gold_rank},
                  {"false_positive", p.false_positive},
                  {"false_positive_sql", p.false_positive_sql},
                  {"candidates", p.candidates}});
  }
  std::ofstream(out / "planted.json") << pj.dump(1) << "\n";

  const nlohmann::json config = {
      {"dataset",
       {{"examples", "examples.json"},
        {"tables", "tables.json"},
        {"database_dir", "database"},
        {"kind", "multi"}}},
      {"scorer", {{"kind", "candidates"}, {"path", "candidates.jsonl"}, {"alpha", 1e-9}}},
      {"search", {{"method", "cab"}, {"preset", "t5"}, {"seed", 0}}},
      {"criterion", {{"kind", "execution"}}},
      {"suite", {{"dir", "suites"}, {"seed", 1}}},
      {"time_limit", 10.0},
      {"output_dir", "runs/default"}};
  std::ofstream(out / "config.json") << config.dump(1) << "\n";
  return planted;
}

std::vector<PlantedQuestion> read_planted(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  const auto j = nlohmann::json::parse(in);
  std::vector<PlantedQuestion> out;
  for (const auto& e : j) {
    out.push_back({e.at("question_id").get<std::string>(), e.at("gold_rank").get<int>(),
                   e.at("false_positive").get<bool>(), e.at("false_positive_sql").get<std::string>(),
                   e.at("candidates").get<int>()});
  }
  return out;
}

}  // namespace gsql::testing
