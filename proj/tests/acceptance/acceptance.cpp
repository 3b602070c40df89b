// Acceptance gate. One PASS/FAIL line per criterion; exit status is the
// number of failures. Usage: gsql_acceptance <demo-dir>
// where <demo-dir> holds the synthetic corpus and its built suites.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gsql/commands.hpp"
#include "gsql/search.hpp"
#include "synthetic.hpp"
#include "toy_models.hpp"

namespace fs = std::filesystem;
using namespace gsql;

namespace {

// Pinned tolerances.
constexpr double kLogProbTol = 1e-12;
constexpr double kSigmas = 3.0;
constexpr double kExactBeamSeconds = 1.0;
constexpr double kPlantedRankSeconds = 60.0;
constexpr double kMinNoEmpty = 95.0;
constexpr double kMinCover = 95.0;
constexpr double kMaxTests = 5.0;
constexpr std::uint64_t kMaxSuiteBytes = 10ull * 1024 * 1024;
constexpr double kMaxBuildSeconds = 600.0;
constexpr double kTimeoutSlack = 0.5;
constexpr int kMinPlantedFalsePositives = 10;
constexpr int kUrDraws = 100000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<nlohmann::json> read_lines(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---- 1 -------------------------------------------------------------------

Outcome exact_beam() {
  double worst = 0;
  int scorers = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto toy = testing::random_toy_scorer(3, 4, seed);
    if (toy.vocab().size() > 5 || toy.max_length() > 4) return {false, "toy scorer too large"};
    auto all = testing::enumerate_sequences(toy);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return a.tokens < b.tokens;
    });
    const int n = static_cast<int>(all.size());
    const auto start = Clock::now();
    const auto got = beam_search(toy, n, n);
    worst = std::max(worst, since(start));
    if (got.size() != all.size()) return {false, "seed " + std::to_string(seed) + ": size mismatch"};
    for (size_t i = 0; i < all.size(); ++i) {
      if (got[i].tokens != all[i].tokens || std::abs(got[i].log_prob - all[i].log_prob) > kLogProbTol) {
        return {false, "seed " + std::to_string(seed) + ": rank " + std::to_string(i) + " differs"};
      }
    }
    ++scorers;
  }
  return {worst < kExactBeamSeconds,
          std::to_string(scorers) + " scorers exact, slowest " + fmt("%.4fs", worst)};
}

// ---- 2 -------------------------------------------------------------------

// Independent argmax walk, ties to the lower token id.
std::vector<TokenId> argmax_walk(const Scorer& s) {
  std::vector<TokenId> prefix;
  while (true) {
    const auto d = s.next_distribution(prefix);
    size_t best = 0;
    for (size_t i = 1; i < d.size(); ++i) {
      if (d[i] > d[best]) best = i;
    }
    prefix.push_back(static_cast<TokenId>(best));
    if (static_cast<TokenId>(best) == s.vocab().eos()) return prefix;
  }
}

Outcome greedy_degeneration() {
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto toy = testing::random_toy_scorer(4, 6, 1000 + seed, 0.4);
    const auto expect = argmax_walk(toy);
    const auto greedy = greedy_decode(toy, 1.0);
    const auto cab = cab_search(toy, CabSchedule{{1}, {1}}, [](const Hypothesis&) { return true; }, 1.0);
    const auto topk = topk_sample(toy, 1, 5, 1.0, seed);
    bool ok = greedy.tokens == expect && cab.selected && cab.selected->tokens == expect;
    for (const auto& h : topk) ok = ok && h.tokens == expect;
    if (!ok) return {false, "seed " + std::to_string(1000 + seed) + " disagrees"};
    ++agree;
  }
  return {true, std::to_string(agree) + "/100 scorers: greedy = CAB{(1,1)} = top-k(1) at T=1"};
}

// ---- 3 -------------------------------------------------------------------

Outcome unique_randomizer_distribution() {
  Vocabulary vocab({"a", "b", "c"});
  const std::vector<double> p{0.6, 0.3, 0.1};
  std::vector<TokenId> ids{vocab.id("a"), vocab.id("b"), vocab.id("c")};
  const CallbackScorer model(vocab, 2, [&](std::span<const TokenId> prefix) {
    Distribution d(vocab.size(), 0.0);
    if (prefix.empty()) {
      for (size_t i = 0; i < 3; ++i) d[static_cast<size_t>(ids[i])] = p[i];
    } else {
      d[static_cast<size_t>(vocab.eos())] = 1.0;
    }
    return d;
  });
  auto index_of = [&](const Hypothesis& h) {
    return static_cast<size_t>(std::find(ids.begin(), ids.end(), h.tokens.at(0)) - ids.begin());
  };
  std::vector<long> first(3, 0);
  std::vector<std::vector<long>> second(3, std::vector<long>(3, 0));
  for (int i = 0; i < kUrDraws; ++i) {
    UniqueRandomizer ur(model, static_cast<std::uint64_t>(i));
    std::set<std::vector<TokenId>> seen;
    std::vector<size_t> order;
    while (auto h = ur.draw()) {
      if (!seen.insert(h->tokens).second) return {false, "duplicate within a state"};
      order.push_back(index_of(*h));
      if (order.size() == 1 && std::abs(ur.residual_mass() - (1.0 - p[order[0]])) > kLogProbTol) {
        return {false, "residual mass off after first draw"};
      }
    }
    if (order.size() != 3) return {false, "state did not yield all 3 sequences"};
    ++first[order[0]];
    ++second[order[0]][order[1]];
  }
  double worst = 0;  // in sigmas
  auto z = [&](long count, long n, double prob) {
    const double sd = std::sqrt(n * prob * (1 - prob));
    const double zz = std::abs(count - n * prob) / sd;
    worst = std::max(worst, zz);
    return zz <= kSigmas;
  };
  bool ok = true;
  for (size_t i = 0; i < 3; ++i) ok = z(first[i], kUrDraws, p[i]) && ok;
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      if (i == j) {
        ok = ok && second[i][j] == 0;
        continue;
      }
      ok = z(second[i][j], first[i], p[j] / (1 - p[i])) && ok;
    }
  }
  return {ok, std::to_string(kUrDraws) + " states, worst deviation " + fmt("%.2f sigma", worst)};
}

// ---- 4 -------------------------------------------------------------------

Outcome planted_rank() {
  const int L = 10;
  const auto model = testing::binary_product_scorer(L);
  const auto t5 = CabSchedule::preset("t5");
  const auto start = Clock::now();
  std::vector<std::string> lines;
  bool ok = true;
  for (int r : {1, 7, 50, 500}) {
    const auto target = testing::binary_rank_sequence(model, L, r);
    for (int cap : kBeamCurveCaps) {
      const auto sched = t5.capped(cap);
      const auto res = cab_search(model, sched, [&](const Hypothesis& h) { return h.tokens == target; });
      const int biggest = *std::max_element(sched.beam_sizes.begin(), sched.beam_sizes.end());
      const bool expect = biggest >= r;
      int first_stage = 0;
      for (int b : sched.beam_sizes) {
        if (b >= r) {
          first_stage = b;
          break;
        }
      }
      const bool found = res.selected.has_value();
      if (found != expect || (found && res.found_at != first_stage)) {
        ok = false;
        lines.push_back("r=" + std::to_string(r) + " cap=" + std::to_string(cap) + " wrong");
      }
    }
  }
  const double took = since(start);
  std::string detail = "r in {1,7,50,500} x caps {1,10,100,800}, " + fmt("%.2fs", took);
  for (const auto& l : lines) detail += "; " + l;
  return {ok && took < kPlantedRankSeconds, detail};
}

// ---- demo runs -------------------------------------------------------------

struct Demo {
  fs::path dir;
  nlohmann::json base;

  RunConfig config(const std::vector<std::string>& overrides) const {
    nlohmann::json j = base;
    for (const auto& o : overrides) apply_override(j, o);
    return config_from_json(j, dir);
  }
};

struct Run {
  RunConfig config;
  nlohmann::json report;
};

Run search_and_evaluate(const Demo& demo, const std::string& criterion, const std::string& out_name) {
  Run run{demo.config({"criterion.kind=" + criterion, "search.log_candidates=true"}), {}};
  run.config.output_dir = demo.dir / "acceptance" / out_name;
  fs::remove_all(run.config.output_dir);
  std::ostringstream out, err;
  if (cmd_search(run.config, out, err) != 0) throw std::runtime_error("search failed: " + err.str());
  if (cmd_evaluate(run.config, {}, out, err) != 0) throw std::runtime_error("evaluate failed: " + err.str());
  std::ifstream in(run.config.output_dir / "report.json");
  run.report = nlohmann::json::parse(in);
  return run;
}

const nlohmann::json& only_cell(const Run& r) {
  const auto& cells = r.report.at("cells");
  if (cells.size() != 1) throw std::runtime_error("expected one report cell");
  return cells[0];
}

class DemoRuns {
 public:
  explicit DemoRuns(const Demo& d) : demo_(d) {}
  const Run& one_test() { return get("one-test", one_); }
  const Run& test_suite() { return get("test-suite", suite_); }
  const Demo& demo() const { return demo_; }

 private:
  const Run& get(const std::string& kind, std::optional<Run>& slot) {
    if (!slot) slot = search_and_evaluate(demo_, kind, kind);
    return *slot;
  }
  const Demo& demo_;
  std::optional<Run> one_, suite_;
};

// ---- 5 -------------------------------------------------------------------

Outcome monotonicity(DemoRuns& runs) {
  const RunConfig& cfg = runs.test_suite().config;
  runs.one_test();
  const Dataset ds = Dataset::load(cfg.dataset);
  const Executor executor;
  const double limit = cfg.effective_time_limit();
  std::map<std::string, std::set<std::string>> tested;
  for (const char* run : {"one-test", "test-suite"}) {
    for (const auto& j : read_lines(runs.demo().dir / "acceptance" / run / "candidates.jsonl")) {
      auto& bucket = tested[j.at("question_id").get<std::string>()];
      for (const auto& t : j.at("tested")) bucket.insert(t.at("sql").get<std::string>());
    }
  }
  long candidates = 0, violations = 0, suite_pass = 0, one_pass = 0, exec_pass = 0;
  for (const auto& ex : ds.examples()) {
    const auto& original = ds.database(ex.db_id);
    const auto gold = executor.execute(ex.query, original, limit);
    const SearchCriterion one = criterion::OneTest{original, *denotation_of(gold)};
    const SearchCriterion suite = make_suite_criterion(
        load_suite(suite_path(cfg, ex.question_id), original.schema()), original, *denotation_of(gold));
    const SearchCriterion exec = criterion::Execution{};
    const CheckContext ctx{&executor, &original.schema(), &original, limit};
    for (const auto& sql : tested[ex.question_id]) {
      const bool s = check(suite, sql, ctx);
      const bool o = check(one, sql, ctx);
      const bool e = check(exec, sql, ctx);
      violations += (s && !o) + (o && !e);
      suite_pass += s;
      one_pass += o;
      exec_pass += e;
      ++candidates;
    }
  }
  std::ostringstream d;
  d << candidates << " candidates; pass suite/one-test/exec " << suite_pass << "/" << one_pass << "/"
    << exec_pass << "; violations " << violations;
  return {candidates > 0 && violations == 0, d.str()};
}

// ---- 6 -------------------------------------------------------------------

Outcome false_positive_pattern(DemoRuns& runs) {
  const auto planted = testing::read_planted(runs.demo().dir / "planted.json");
  int fps = 0;
  for (const auto& q : planted) fps += q.false_positive;
  const auto& one = only_cell(runs.one_test());
  const auto& suite = only_cell(runs.test_suite());
  const int total = one.at("total").get<int>();
  const double one_ex = one.at("execution").get<double>();
  const double one_ts = one.at("test_suite").get<double>();
  const double suite_ts = suite.at("test_suite").get<double>();
  // Realized: one-test accepted something the suite rejects.
  int realized = 0;
  for (const auto& r : read_lines(runs.one_test().config.output_dir / "records.jsonl")) {
    realized += r.at("execution").get<bool>() && r.at("test_suite") == false;
  }
  const bool ok = total == 50 && fps >= kMinPlantedFalsePositives && one_ex == 1.0 && one_ts < 1.0 &&
                  suite_ts > one_ts;
  std::ostringstream d;
  d << total << " questions, " << fps << " planted FPs (" << realized << " realized); one-test EX "
    << fmt("%.3f TS %.3f; suite-guided TS %.3f", one_ex, one_ts, suite_ts);
  return {ok, d.str()};
}

// ---- 7 -------------------------------------------------------------------

Outcome suite_quality(const Demo& demo) {
  const fs::path dir = demo.dir / "acceptance" / "suite30";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ifstream in(demo.dir / "examples.json");
  auto examples = nlohmann::json::parse(in);
  examples.erase(examples.begin() + 30, examples.end());
  std::ofstream(dir / "examples.json") << examples.dump(1) << "\n";

  RunConfig cfg = demo.config({});
  cfg.dataset.examples = dir / "examples.json";
  cfg.suite_dir = dir / "suites";
  cfg.output_dir = dir;
  std::ostringstream out, err;
  const auto start = Clock::now();
  if (cmd_build_suite(cfg, out, err) != 0) return {false, "build-suite failed: " + err.str()};
  const double took = since(start);
  if (cmd_suite_stats(cfg, out, err) != 0) return {false, "suite-stats failed: " + err.str()};
  std::ifstream sj(cfg.suite_dir / "stats.json");
  const auto stats = nlohmann::json::parse(sj);
  const double no_empty = stats.at("NoEmpty"), cover = stats.at("Cover"), tests = stats.at("Tests");
  const auto size = stats.at("Size").get<std::uint64_t>();
  const int suites = stats.at("suites");
  const bool ok = suites == 30 && no_empty >= kMinNoEmpty && cover >= kMinCover && tests <= kMaxTests &&
                  size < kMaxSuiteBytes && took < kMaxBuildSeconds;
  std::ostringstream d;
  d << suites << " suites; NoEmpty " << fmt("%.1f Cover %.1f Tests %.2f", no_empty, cover, tests) << " Size "
    << size << " B; build " << fmt("%.1fs", took);
  return {ok, d.str()};
}

// ---- 8 -------------------------------------------------------------------

Outcome beam_curve(const Demo& demo) {
  nlohmann::json j = demo.base;
  apply_override(j, "criterion.kind=test-suite");
  const fs::path out_dir = demo.dir / "acceptance" / "sweep";
  fs::remove_all(out_dir);
  j["output_dir"] = out_dir.string();
  std::string axis = "search.beam_cap=";
  for (size_t i = 0; i < kBeamCurveCaps.size(); ++i) axis += (i ? "," : "") + std::to_string(kBeamCurveCaps[i]);
  std::ostringstream out, err;
  if (cmd_sweep(j, demo.dir, {axis}, out, err) != 0) return {false, "sweep failed: " + err.str()};
  std::istringstream csv(read_text(out_dir / "beam_curve.csv"));
  std::string line;
  std::getline(csv, line);
  if (line != "max_beam,execution,test_suite,total") return {false, "bad header " + line};
  std::vector<std::pair<int, double>> points;
  while (std::getline(csv, line)) {
    int cap = 0, total = 0;
    double ex = 0, ts = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%d", &cap, &ex, &ts, &total) == 4) points.push_back({cap, ts});
  }
  bool ok = points.size() == kBeamCurveCaps.size();
  std::string detail = "TS";
  for (size_t i = 0; i < points.size(); ++i) {
    detail += " " + std::to_string(points[i].first) + ":" + fmt("%.2f", points[i].second);
    if (i && points[i].second < points[i - 1].second) ok = false;
  }
  return {ok, detail};
}

// ---- 9 -------------------------------------------------------------------

Outcome executor_robustness() {
  Schema s;
  s.db_id = "robust";
  s.tables.push_back({"t", {{"x", ColumnType::kInteger}}});
  s.primary_keys.push_back({"t", "x"});
  std::vector<Row> rows;
  for (int i = 1; i <= 20; ++i) rows.push_back({std::int64_t(i)});
  const auto db = DatabaseInstance::from_rows(s, {rows}, {});
  const double limit = 1.0;

  std::set<int> crash, hang;
  for (int i = 0; i < 5; ++i) {
    crash.insert(97 + 199 * i);
    hang.insert(43 + 211 * i);
  }
  std::vector<ExecRequest> reqs;
  for (int i = 0; i < 1000; ++i) {
    std::string sql = "SELECT count(*) FROM t WHERE x <= " + std::to_string(i % 25);
    if (crash.count(i)) sql = "SELECT gsql_crash()";
    if (hang.count(i)) {
      sql = "WITH RECURSIVE c(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM c) SELECT count(*) FROM c";
    }
    reqs.push_back({sql, &db, limit});
  }
  ExecutorOptions opts;
  opts.fault_injection = true;
  const Executor ex(opts);
  const auto start = Clock::now();
  const auto out = ex.execute_batch(reqs);
  const double took = since(start);

  int failures = 0, wrong = 0, late = 0, misclassified = 0;
  double slowest_timeout = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& o = out[static_cast<size_t>(i)];
    if (!is_success(o)) ++failures;
    if (crash.count(i)) {
      misclassified += !std::holds_alternative<ExecError>(o);
    } else if (hang.count(i)) {
      const auto* t = std::get_if<ExecTimeout>(&o);
      if (!t) {
        ++misclassified;
        continue;
      }
      slowest_timeout = std::max(slowest_timeout, t->wall_seconds);
      late += t->wall_seconds > limit + kTimeoutSlack;
    } else {
      const auto* d = denotation_of(o);
      const auto expect = static_cast<std::int64_t>(std::min(i % 25, 20));
      wrong += !d || d->rows.size() != 1 || d->rows[0].size() != 1 ||
               !std::holds_alternative<std::int64_t>(d->rows[0][0]) ||
               std::get<std::int64_t>(d->rows[0][0]) != expect;
    }
  }
  std::ostringstream d;
  d << "1000 queries, " << failures << " non-success, " << wrong << " wrong, " << misclassified
    << " misclassified; slowest timeout " << fmt("%.3fs (limit %.1fs)", slowest_timeout, limit) << "; batch "
    << fmt("%.1fs", took);
  return {failures == 10 && wrong == 0 && misclassified == 0 && late == 0, d.str()};
}

// ---- 10 ------------------------------------------------------------------

Outcome determinism(DemoRuns& runs) {
  const Run& a = runs.test_suite();
  const Run b = search_and_evaluate(runs.demo(), "test-suite", "test-suite-repeat");
  std::string detail;
  bool ok = true;
  for (const char* f : {"verdicts.jsonl", "records.jsonl", "report.json", "candidates.jsonl"}) {
    const std::string x = read_text(a.config.output_dir / f);
    const std::string y = read_text(b.config.output_dir / f);
    const bool same = !x.empty() && x == y;
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : ", ") + f + (same ? " identical" : " DIFFERENT");
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gsql_acceptance <demo-dir>\n";
    return 2;
  }
  Demo demo;
  demo.dir = fs::absolute(argv[1]);
  try {
    demo.base = load_config_json(demo.dir / "config.json", {});
  } catch (const std::exception& e) {
    std::cerr << "cannot read demo config: " << e.what() << "\n";
    return 2;
  }
  DemoRuns runs(demo);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact beam search on toy scorers", exact_beam},
      {"greedy degeneration", greedy_degeneration},
      {"sampling without replacement", unique_randomizer_distribution},
      {"planted-rank recovery", planted_rank},
      {"criterion monotonicity", [&] { return monotonicity(runs); }},
      {"one-test false positives caught by suites", [&] { return false_positive_pattern(runs); }},
      {"suite quality on 30 gold queries", [&] { return suite_quality(demo); }},
      {"TS monotone in max beam", [&] { return beam_curve(demo); }},
      {"executor robustness", executor_robustness},
      {"determinism", [&] { return determinism(runs); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s: %s  [%s] (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str(), since(start));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
