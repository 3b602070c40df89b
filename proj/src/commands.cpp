#include "gsql/commands.hpp"

#include <sqlite3.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "gsql/sql_lexer.hpp"

namespace gsql {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

// Unparseable lines (a run killed mid-write) are skipped.
std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.is_object()) out.push_back(std::move(j));
  }
  return out;
}

std::string jsonl(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// One section per command, merged into <dir>/manifest.json.
void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& config,
                    nlohmann::json extra = nlohmann::json::object()) {
  const fs::path path = dir / "manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    manifest = nlohmann::json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) manifest = nlohmann::json::object();
  }
  manifest["tool"] = "gsql";
  manifest["version"] = kVersion;
  manifest["sqlite_version"] = sqlite3_libversion();
  nlohmann::json section = {{"config_hash", config_hash(config)},
                            {"config", config_to_json(config)},
                            {"seeds",
                             {{"search", config.search.seed}, {"suite", config.suite.seed}}}};
  for (auto& [k, v] : extra.items()) section[k] = v;
  manifest["commands"][command] = section;
  write_file(path, manifest.dump(1) + "\n");
}

std::string sanitize(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return out;
}

Executor make_executor(const RunConfig& config) {
  ExecutorOptions options;
  options.workers = config.workers;
  return Executor(options);
}

std::map<std::string, double> read_timings(const fs::path& path) {
  std::map<std::string, double> out;
  for (const auto& j : read_jsonl(path)) {
    if (j.contains("question_id") && j.contains("wall_seconds")) {
      out[j.at("question_id").get<std::string>()] = j.at("wall_seconds").get<double>();
    }
  }
  return out;
}

void write_timings(const fs::path& path, const std::vector<DatasetExample>& examples,
                   const std::map<std::string, double>& timings, const std::string& command) {
  std::vector<std::string> lines;
  for (const auto& ex : examples) {
    auto it = timings.find(ex.question_id);
    if (it == timings.end()) continue;
    lines.push_back(nlohmann::json{{"question_id", ex.question_id},
                                   {"command", command},
                                   {"wall_seconds", it->second}}
                        .dump());
  }
  write_file(path, jsonl(lines));
}

}  // namespace

// ---- scorers ---------------------------------------------------------------

std::map<std::string, std::vector<WeightedCandidate>> load_candidates(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("cannot read candidates " + path.string());
  std::map<std::string, std::vector<WeightedCandidate>> out;
  for (const auto& j : read_jsonl(path)) {
    auto& list = out[j.at("question_id").get<std::string>()];
    for (const auto& c : j.at("candidates")) {
      list.push_back({c.at("sql").get<std::string>(), c.value("weight", 1.0)});
    }
  }
  return out;
}

void save_candidates(const fs::path& path,
                     const std::vector<std::pair<std::string, std::vector<WeightedCandidate>>>& rows) {
  std::vector<std::string> lines;
  for (const auto& [qid, list] : rows) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : list) cands.push_back({{"sql", c.sql}, {"weight", c.weight}});
    lines.push_back(nlohmann::json{{"question_id", qid}, {"candidates", cands}}.dump());
  }
  write_file(path, jsonl(lines));
}

NgramScorer candidate_scorer(const std::vector<WeightedCandidate>& candidates, double alpha,
                             int order, int max_length) {
  std::vector<std::vector<std::string>> corpus;
  std::vector<double> weights;
  size_t longest = 0;
  for (const auto& c : candidates) {
    corpus.push_back(tokenize_sql(c.sql));
    weights.push_back(c.weight);
    longest = std::max(longest, corpus.back().size());
  }
  if (max_length <= 0) max_length = static_cast<int>(longest) + 4;
  if (order <= 0) order = max_length;
  return NgramScorer::train(corpus, order, alpha, weights, max_length);
}

ScorerFactory::ScorerFactory(const ScorerConfig& config) : config_(config) {
  if (config.kind == "candidates") {
    candidates_ = load_candidates(config.path);
  } else if (config.kind == "ngram") {
    std::vector<std::vector<std::string>> corpus;
    for (const auto& ex : load_examples(config.path)) corpus.push_back(tokenize_sql(ex.query));
    global_ = std::make_shared<NgramScorer>(NgramScorer::train(
        corpus, config.order > 0 ? config.order : 3, config.alpha, {}, config.max_length));
  } else if (config.kind != "replay") {
    throw ConfigError("unknown scorer kind " + config.kind);
  }
}

std::unique_ptr<Scorer> ScorerFactory::make(const DatasetExample& example) const {
  if (config_.kind == "candidates") {
    auto it = candidates_.find(example.question_id);
    if (it == candidates_.end() || it->second.empty()) {
      throw std::runtime_error("no candidates for " + example.question_id);
    }
    return std::make_unique<NgramScorer>(
        candidate_scorer(it->second, config_.alpha, config_.order, config_.max_length));
  }
  if (config_.kind == "ngram") return std::make_unique<NgramScorer>(*global_);
  return std::make_unique<ReplayScorer>(
      ReplayScorer::load(config_.path / (sanitize(example.question_id) + ".jsonl")));
}

fs::path suite_path(const RunConfig& config, const std::string& question_id) {
  return config.suite_dir / sanitize(question_id);
}

void run_ordered(size_t n, int jobs, const std::function<std::string(size_t)>& work,
                 const std::function<void(size_t, const std::string&)>& sink) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) sink(i, work(i));
    return;
  }
  std::vector<std::optional<std::string>> done(n);
  std::mutex mu;
  std::atomic<size_t> next{0};
  size_t flushed = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      std::string result;
      try {
        result = work(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
      std::lock_guard lock(mu);
      done[i] = std::move(result);
      while (flushed < n && done[flushed]) {
        sink(flushed, *done[flushed]);
        done[flushed].reset();
        ++flushed;
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- build-suite / suite-stats ---------------------------------------------

namespace {

struct LoadedSuite {
  TestSuite suite;
  Query gold;
  NeighborSet heldout;
};

void report_stats(const RunConfig& config, const std::vector<LoadedSuite>& loaded,
                  const Executor& executor, std::ostream& out) {
  std::vector<TestSuite> suites;
  std::vector<Query> golds;
  std::vector<NeighborSet> heldout;
  for (const auto& l : loaded) {
    suites.push_back(l.suite);
    golds.push_back(l.gold);
    heldout.push_back(l.heldout);
  }
  const SuiteStats stats = suite_stats(suites, golds, heldout, executor,
                                       config.effective_time_limit(),
                                       config.suite.count_one_as_empty);
  const std::string table = render_suite_stats(stats);
  write_file(config.suite_dir / "stats.txt", table);
  write_file(config.suite_dir / "stats.json", suite_stats_to_json(stats).dump(1) + "\n");
  out << table;
}

std::optional<LoadedSuite> load_existing(const RunConfig& config, const DatasetExample& ex,
                                         const Schema& schema, const std::string& hash) {
  const fs::path dir = suite_path(config, ex.question_id);
  if (!fs::exists(dir / "manifest.json")) return std::nullopt;
  std::ifstream in(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded() || manifest.value("config_hash", "") != hash) return std::nullopt;
  LoadedSuite l;
  l.suite = load_suite(dir, schema);
  l.gold = parse_query(ex.query, schema);
  l.heldout.gold = l.gold;
  for (const auto& sql : manifest.value("heldout", std::vector<std::string>{})) {
    try {
      Query q = parse_query(sql, schema);
      l.heldout.neighbors.push_back({q, print_query(q), EditKind::kOpSwap});
    } catch (const QueryError&) {
    }
  }
  return l;
}

}  // namespace

int cmd_build_suite(const RunConfig& config, std::ostream& out, std::ostream& err) {
  validate_paths(config, false, false);
  const Dataset dataset = Dataset::load(config.dataset);
  const Executor executor = make_executor(config);
  const std::string hash = config_hash(config);
  fs::create_directories(config.suite_dir);
  const fs::path timings_path = config.suite_dir / "timings.jsonl";
  std::map<std::string, double> timings = read_timings(timings_path);

  const auto& examples = dataset.examples();
  std::vector<std::optional<LoadedSuite>> results(examples.size());
  std::mutex mu;
  int failures = 0;
  run_ordered(
      examples.size(), config.jobs,
      [&](size_t i) -> std::string {
        const auto& ex = examples[i];
        try {
          const DatabaseInstance& original = dataset.database(ex.db_id);
          const Schema& schema = original.schema();
          if (auto existing = load_existing(config, ex, schema, hash)) {
            results[i] = std::move(existing);
            return "resumed";
          }
          const auto start = std::chrono::steady_clock::now();
          const Query gold = parse_query(ex.query, schema);
          const std::uint64_t seed = config.suite.seed ^ fnv1a64(ex.question_id);
          NeighborSplit split;
          split.construction.gold = gold;
          split.heldout.gold = gold;
          try {
            split = split_neighbors(gold, schema, config.suite.neighbors,
                                    config.suite.heldout_neighbors, seed, &original);
          } catch (const NoNeighborsPossible&) {
          }
          LoadedSuite l;
          l.suite = build_suite(ex.question_id, gold, split.construction, original, config.suite,
                                executor);
          l.gold = gold;
          l.heldout = split.heldout;
          nlohmann::json extra = {{"config_hash", hash}, {"db_id", ex.db_id}};
          extra["heldout"] = nlohmann::json::array();
          for (const auto& n : split.heldout.neighbors) extra["heldout"].push_back(n.sql);
          save_suite(l.suite, suite_path(config, ex.question_id), extra);
          l.suite.build_seconds = seconds_since(start);
          {
            std::lock_guard lock(mu);
            timings[ex.question_id] = l.suite.build_seconds;
          }
          if (!l.suite.nonempty_found) {
            std::lock_guard lock(mu);
            err << ex.question_id << ": no database with non-empty gold output\n";
          }
          results[i] = std::move(l);
          return "built";
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          err << ex.question_id << ": " << e.what() << "\n";
          ++failures;
          return "failed";
        }
      },
      [&](size_t, const std::string&) {});

  std::vector<LoadedSuite> loaded;
  std::vector<std::string> ids;
  for (size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    auto it = timings.find(examples[i].question_id);
    results[i]->suite.build_seconds = it == timings.end() ? 0.0 : it->second;
    ids.push_back(examples[i].question_id);
    loaded.push_back(std::move(*results[i]));
  }
  write_timings(timings_path, examples, timings, "build-suite");
  write_manifest(config.suite_dir, "build-suite", config,
                 {{"queries", ids}, {"failures", failures}});
  report_stats(config, loaded, executor, out);
  return 0;
}

int cmd_suite_stats(const RunConfig& config, std::ostream& out, std::ostream& err) {
  validate_paths(config, false, true);
  const Dataset dataset = Dataset::load(config.dataset);
  const Executor executor = make_executor(config);
  const auto timings = read_timings(config.suite_dir / "timings.jsonl");
  std::vector<LoadedSuite> loaded;
  for (const auto& ex : dataset.examples()) {
    try {
      const Schema& schema = dataset.schema(ex.db_id);
      const fs::path dir = suite_path(config, ex.question_id);
      std::ifstream in(dir / "manifest.json");
      if (!in) {
        err << ex.question_id << ": no suite\n";
        continue;
      }
      const auto manifest = nlohmann::json::parse(in);
      auto l = load_existing(config, ex, schema, manifest.value("config_hash", ""));
      if (!l) continue;
      auto it = timings.find(ex.question_id);
      l->suite.build_seconds = it == timings.end() ? 0.0 : it->second;
      loaded.push_back(std::move(*l));
    } catch (const std::exception& e) {
      err << ex.question_id << ": " << e.what() << "\n";
    }
  }
  report_stats(config, loaded, executor, out);
  return 0;
}

// ---- search ------------------------------------------------------------------

namespace {

SearchCriterion build_criterion(const RunConfig& config, const DatasetExample& ex,
                                const DatabaseInstance& original, const Executor& executor) {
  const std::string& kind = config.criterion.kind;
  if (kind == "execution") return criterion::Execution{};
  if (kind == "column-match") {
    const auto mode = config.criterion.column_mode == "ordered" ? ColumnMatchMode::kOrdered
                                                                : ColumnMatchMode::kMultiset;
    return criterion::ColumnMatch{column_signature(parse_query(ex.query, original.schema())), mode};
  }
  const ExecutionOutcome gold = executor.execute(ex.query, original, config.effective_time_limit());
  const Denotation* expected = denotation_of(gold);
  if (!expected) throw std::runtime_error("gold query failed: " + describe(gold));
  if (kind == "one-test") return criterion::OneTest{original, *expected};
  const TestSuite suite = load_suite(suite_path(config, ex.question_id), original.schema());
  return make_suite_criterion(suite, original, *expected);
}

SearchVerdict fallback_verdict(const std::string& qid, const Scorer* scorer,
                               const RunConfig& config) {
  SearchVerdict v;
  v.question_id = qid;
  if (scorer) v.greedy = hypothesis_text(*scorer, greedy_decode(*scorer, 1.0));
  v.selected = v.greedy;
  v.fallback_used = true;
  v.method = config.search.method;
  v.criterion = config.criterion.kind;
  return v;
}

struct SearchRow {
  std::string verdict;
  std::string candidates;
  double seconds = 0;
};

}  // namespace

int cmd_search(const RunConfig& config, std::ostream& out, std::ostream& err) {
  validate_paths(config, true, config.criterion.kind == "test-suite");
  const Dataset dataset = Dataset::load(config.dataset);
  const Executor executor = make_executor(config);
  const ScorerFactory factory(config.scorer);
  const MethodConfig method = config.method_config();
  fs::create_directories(config.output_dir);
  const fs::path verdicts_path = config.output_dir / "verdicts.jsonl";
  const fs::path candidates_path = config.output_dir / "candidates.jsonl";
  const fs::path timings_path = config.output_dir / "timings.jsonl";
  const auto& examples = dataset.examples();

  // Resume: keep valid finished records, keyed by question id.
  std::set<std::string> known;
  for (const auto& ex : examples) known.insert(ex.question_id);
  std::map<std::string, std::string> verdicts, candidates;
  for (const auto& j : read_jsonl(verdicts_path)) {
    const std::string qid = j.value("question_id", "");
    if (known.count(qid)) verdicts[qid] = j.dump();
  }
  if (config.search.log_candidates) {
    for (const auto& j : read_jsonl(candidates_path)) {
      const std::string qid = j.value("question_id", "");
      if (verdicts.count(qid)) candidates[qid] = j.dump();
    }
    for (auto it = verdicts.begin(); it != verdicts.end();) {
      it = candidates.count(it->first) ? std::next(it) : verdicts.erase(it);
    }
  }
  std::map<std::string, double> timings = read_timings(timings_path);

  auto ordered_lines = [&](const std::map<std::string, std::string>& by_id) {
    std::vector<std::string> lines;
    for (const auto& ex : examples) {
      auto it = by_id.find(ex.question_id);
      if (it != by_id.end()) lines.push_back(it->second);
    }
    return jsonl(lines);
  };
  write_file(verdicts_path, ordered_lines(verdicts));
  if (config.search.log_candidates) write_file(candidates_path, ordered_lines(candidates));

  std::vector<size_t> todo;
  for (size_t i = 0; i < examples.size(); ++i) {
    if (!verdicts.count(examples[i].question_id)) todo.push_back(i);
  }
  std::ofstream verdict_log(verdicts_path, std::ios::app);
  std::ofstream candidate_log;
  if (config.search.log_candidates) candidate_log.open(candidates_path, std::ios::app);

  std::vector<SearchRow> rows(todo.size());
  std::mutex err_mu;
  run_ordered(
      todo.size(), config.jobs,
      [&](size_t k) -> std::string {
        const auto& ex = examples[todo[k]];
        const auto start = std::chrono::steady_clock::now();
        std::unique_ptr<Scorer> scorer;
        std::vector<TestedCandidate> tested;
        SearchVerdict verdict;
        try {
          scorer = factory.make(ex);
          const DatabaseInstance& original = dataset.database(ex.db_id);
          const SearchCriterion criterion = build_criterion(config, ex, original, executor);
          CheckContext ctx{&executor, &original.schema(), &original, config.effective_time_limit()};
          verdict = guided_search(ex.question_id, *scorer, method, criterion, ctx,
                                  config.search.log_candidates ? &tested : nullptr);
        } catch (const std::exception& e) {
          {
            std::lock_guard lock(err_mu);
            err << ex.question_id << ": " << e.what() << "\n";
          }
          verdict = fallback_verdict(ex.question_id, scorer.get(), config);
          tested.clear();
        }
        SearchRow& row = rows[k];
        row.verdict = verdict_to_json(verdict).dump();
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& t : tested) cands.push_back({{"sql", t.text}, {"passed", t.passed}});
        row.candidates = nlohmann::json{{"question_id", ex.question_id}, {"tested", cands}}.dump();
        row.seconds = seconds_since(start);
        return {};
      },
      [&](size_t k, const std::string&) {
        const std::string& qid = examples[todo[k]].question_id;
        verdicts[qid] = rows[k].verdict;
        timings[qid] = rows[k].seconds;
        if (config.search.log_candidates) {
          candidates[qid] = rows[k].candidates;
          candidate_log << rows[k].candidates << "\n" << std::flush;
        }
        verdict_log << rows[k].verdict << "\n" << std::flush;
      });
  verdict_log.close();
  candidate_log.close();

  write_file(verdicts_path, ordered_lines(verdicts));
  if (config.search.log_candidates) write_file(candidates_path, ordered_lines(candidates));
  write_timings(timings_path, examples, timings, "search");
  write_manifest(config.output_dir, "search", config,
                 {{"verdicts", verdicts.size()}, {"resumed", verdicts.size() - todo.size()}});
  int passed = 0;
  for (const auto& [qid, line] : verdicts) passed += nlohmann::json::parse(line).value("passed", false);
  out << "search: " << verdicts.size() << " verdicts, " << passed << " passed the "
      << config.criterion.kind << " criterion\n";
  return 0;
}

// ---- evaluate ------------------------------------------------------------------

int cmd_evaluate(const RunConfig& config, const fs::path& verdicts_arg, std::ostream& out,
                 std::ostream& err) {
  validate_paths(config, false, false);
  const Dataset dataset = Dataset::load(config.dataset);
  const Executor executor = make_executor(config);
  const double limit = config.effective_time_limit();
  const fs::path verdicts_path =
      verdicts_arg.empty() ? config.output_dir / "verdicts.jsonl" : verdicts_arg;
  if (!fs::exists(verdicts_path)) throw ConfigError("no verdicts at " + verdicts_path.string());
  std::map<std::string, SearchVerdict> verdicts;
  for (const auto& j : read_jsonl(verdicts_path)) {
    const SearchVerdict v = verdict_from_json(j);
    verdicts[v.question_id] = v;
  }

  const auto& examples = dataset.examples();
  std::vector<std::optional<EvalRecord>> records(examples.size());
  std::mutex err_mu;
  run_ordered(
      examples.size(), config.jobs,
      [&](size_t i) -> std::string {
        const auto& ex = examples[i];
        auto it = verdicts.find(ex.question_id);
        if (it == verdicts.end()) {
          std::lock_guard lock(err_mu);
          err << ex.question_id << ": no verdict\n";
          return {};
        }
        const SearchVerdict& v = it->second;
        EvalRecord r;
        r.question_id = ex.question_id;
        r.gold = ex.query;
        r.predicted = v.selected;
        r.fallback_used = v.fallback_used;
        r.scorer = config.scorer.kind;
        r.criterion = v.criterion;
        r.method = v.method;
        try {
          const DatabaseInstance& original = dataset.database(ex.db_id);
          r.exact_set_match = exact_set_match(ex.query, v.selected, original.schema());
          const auto outcomes = executor.execute_batch(
              {{ex.query, &original, limit}, {v.selected, &original, limit}});
          r.prediction_error = std::holds_alternative<ExecError>(outcomes[1]);
          r.prediction_timeout = std::holds_alternative<ExecTimeout>(outcomes[1]);
          const Denotation* g = denotation_of(outcomes[0]);
          const Denotation* p = denotation_of(outcomes[1]);
          r.execution = g && p && compare(*g, *p);
          const fs::path dir = suite_path(config, ex.question_id);
          if (g && fs::exists(dir / "manifest.json")) {
            const auto suite =
                make_suite_criterion(load_suite(dir, original.schema()), original, *g);
            r.test_suite = r.execution && test_suite_accuracy(v.selected, suite, executor, limit);
          }
        } catch (const std::exception& e) {
          std::lock_guard lock(err_mu);
          err << ex.question_id << ": " << e.what() << "\n";
        }
        records[i] = std::move(r);
        return {};
      },
      [](size_t, const std::string&) {});

  std::vector<EvalRecord> kept;
  std::vector<std::string> lines;
  for (auto& r : records) {
    if (!r) continue;
    lines.push_back(eval_record_to_json(*r).dump());
    kept.push_back(std::move(*r));
  }
  const RunReport report = make_report(kept);
  const std::string text = render_report(report);
  write_file(config.output_dir / "records.jsonl", jsonl(lines));
  write_file(config.output_dir / "report.json", report_to_json(report).dump(1) + "\n");
  write_file(config.output_dir / "report.txt", text);
  write_manifest(config.output_dir, "evaluate", config, {{"records", kept.size()}});
  out << text;
  return 0;
}

// ---- sweep -------------------------------------------------------------------

int cmd_sweep(const nlohmann::json& config_json, const fs::path& base_dir,
              const std::vector<std::string>& axis_specs, std::ostream& out, std::ostream& err) {
  if (axis_specs.empty()) throw ConfigError("sweep needs at least one --sweep axis");
  std::vector<SweepAxis> axes;
  for (const auto& s : axis_specs) axes.push_back(parse_sweep(s));
  const RunConfig root = config_from_json(config_json, base_dir);

  std::vector<std::vector<size_t>> grid = {{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<size_t>> next;
    for (const auto& point : grid) {
      for (size_t v = 0; v < axis.values.size(); ++v) {
        auto p = point;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    grid = std::move(next);
  }

  std::string csv;
  for (const auto& axis : axes) csv += axis.key + ",";
  csv += "criterion,method,total,exact_set_match,execution,test_suite\n";
  std::vector<CurvePoint> curve;
  const bool beam_curve = axes.size() == 1 && axes[0].key == "search.beam_cap";
  for (const auto& point : grid) {
    nlohmann::json j = config_json;
    std::string name;
    for (size_t a = 0; a < axes.size(); ++a) {
      const auto& value = axes[a].values[point[a]];
      const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
      apply_override(j, axes[a].key + "=" + value.dump());
      name += (a ? "_" : "") + axes[a].key + "=" + text;
    }
    j["output_dir"] = (root.output_dir / "sweep" / sanitize(name)).string();
    if (!config_json.contains("suite") || !config_json.at("suite").contains("dir")) {
      j["suite"]["dir"] = root.suite_dir.string();
    }
    const RunConfig config = config_from_json(j, base_dir);
    std::ostringstream sink;
    out << "== " << name << "\n";
    cmd_search(config, sink, err);
    cmd_evaluate(config, {}, sink, err);
    std::ifstream in(config.output_dir / "report.json");
    const auto report = nlohmann::json::parse(in);
    for (const auto& cell : report.at("cells")) {
      for (size_t a = 0; a < axes.size(); ++a) {
        const auto& value = axes[a].values[point[a]];
        csv += (value.is_string() ? value.get<std::string>() : value.dump()) + ",";
      }
      char buf[256];
      const double ts = cell.at("test_suite").is_null() ? -1.0 : cell.at("test_suite").get<double>();
      std::snprintf(buf, sizeof buf, "%s,%s,%d,%.6f,%.6f,%.6f\n",
                    cell.at("criterion").get<std::string>().c_str(),
                    cell.at("method").get<std::string>().c_str(), cell.at("total").get<int>(),
                    cell.at("exact_set_match").get<double>(), cell.at("execution").get<double>(),
                    ts);
      csv += buf;
      if (beam_curve) {
        curve.push_back({config.search.beam_cap, cell.at("execution").get<double>(),
                         ts, cell.at("total").get<int>()});
      }
    }
    out << sink.str();
  }
  write_file(root.output_dir / "sweep.csv", csv);
  if (beam_curve) write_file(root.output_dir / "beam_curve.csv", render_curve_csv(curve));
  write_manifest(root.output_dir, "sweep", root, {{"axes", axis_specs}});
  return 0;
}

}  // namespace gsql
