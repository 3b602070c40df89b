#include <chrono>
#include <cstdlib>

#include "gsql/executor.hpp"
#include "gsql/query_model.hpp"
#include "test_util.hpp"

namespace gsql {
namespace {

DatabaseInstance small_db() {
  Schema s;
  s.db_id = "small";
  s.tables.push_back({"t", {{"x", ColumnType::kInteger}, {"y", ColumnType::kReal}, {"s", ColumnType::kText}}});
  s.primary_keys.push_back({"t", "x"});
  std::vector<Row> rows;
  for (int i = 1; i <= 20; ++i) {
    rows.push_back({std::int64_t(i), double(i) / 4.0, i % 3 ? Cell{std::string("w") + char('a' + i % 5)} : Cell{}});
  }
  return DatabaseInstance::from_rows(s, {rows}, {});
}

const Denotation& ok(const ExecutionOutcome& o) {
  const Denotation* d = denotation_of(o);
  if (!d) throw std::runtime_error(describe(o));
  return *d;
}

Denotation rows_of(std::vector<Row> rows, bool ordered = false) {
  Denotation d;
  d.column_count = rows.empty() ? 1 : rows[0].size();
  d.rows = std::move(rows);
  d.ordered = ordered;
  return d;
}

TEST(Compare, OrderSensitivity) {
  const auto a = rows_of({{std::int64_t(1)}, {std::int64_t(2)}});
  const auto b = rows_of({{std::int64_t(2)}, {std::int64_t(1)}});
  EXPECT_TRUE(compare(a, b));
  auto ao = a;
  ao.ordered = true;
  EXPECT_FALSE(compare(ao, b));
  EXPECT_TRUE(compare(ao, a));
}

TEST(Compare, MultisetCountsDuplicates) {
  const auto a = rows_of({{std::int64_t(1)}, {std::int64_t(1)}, {std::int64_t(2)}});
  const auto b = rows_of({{std::int64_t(1)}, {std::int64_t(2)}, {std::int64_t(2)}});
  EXPECT_FALSE(compare(a, b));
}

TEST(Compare, ColumnCountAndNulls) {
  Denotation a = rows_of({{std::int64_t(1), Cell{}}});
  Denotation b = rows_of({{std::int64_t(1), Cell{}}});
  EXPECT_TRUE(compare(a, b));
  Denotation c = rows_of({{std::int64_t(1)}});
  EXPECT_FALSE(compare(a, c));
  Denotation e1, e2;
  e1.column_count = 1;
  e2.column_count = 2;
  EXPECT_FALSE(compare(e1, e2));
}

// The engine computes 1/3; the literal is a rounded copy.
TEST(Compare, RealToleranceAgainstEngine) {
  const Executor ex;
  const auto db = small_db();
  const auto engine = ex.execute("SELECT 1.0 / 3", db, 5);
  const auto typed = rows_of({{0.3333333}});
  EXPECT_TRUE(compare(ok(engine), typed));
  EXPECT_FALSE(compare(ok(engine), rows_of({{0.34}})));
}

TEST(Compare, HalfPrecision) {
  EXPECT_EQ(round_to_half_precision(1.0), 1.0);
  EXPECT_EQ(round_to_half_precision(2049.0), 2048.0);  // 11 significant bits
  EXPECT_EQ(round_to_half_precision(0.1), 0.0999755859375);
  EXPECT_TRUE(std::isnan(round_to_half_precision(NAN)));
}

// Randomized: compare is reflexive and symmetric, and permutation-blind
// for unordered results.
TEST(Compare, Properties) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Row> rows;
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      Row r;
      r.push_back(std::int64_t(rng() % 3));
      r.push_back(rng() % 4 == 0 ? Cell{} : Cell{double(rng() % 5) / 3.0});
      rows.push_back(r);
    }
    Denotation a;
    a.column_count = 2;
    a.rows = rows;
    Denotation b = a;
    std::shuffle(b.rows.begin(), b.rows.end(), rng);
    EXPECT_TRUE(compare(a, a));
    EXPECT_TRUE(compare(a, b));
    EXPECT_EQ(compare(a, b), compare(b, a));
    if (!b.rows.empty()) {
      b.rows[0][0] = std::int64_t(99);
      EXPECT_FALSE(compare(a, b));
      EXPECT_FALSE(compare(b, a));
    }
  }
}

TEST(EmptyOutput, Rules) {
  const Schema& s = test::fixture_dataset().schema("concert_singer");
  const Query agg = parse_query("SELECT count(*) FROM singer", s);
  const Query plain = parse_query("SELECT age FROM singer", s);
  const auto zero = rows_of({{std::int64_t(0)}});
  const auto one = rows_of({{std::int64_t(1)}});
  EXPECT_TRUE(is_empty_output(rows_of({}), plain));
  EXPECT_TRUE(is_empty_output(zero, agg));
  EXPECT_FALSE(is_empty_output(zero, plain));
  EXPECT_TRUE(is_empty_output(rows_of({{Cell{}}}), agg));
  EXPECT_FALSE(is_empty_output(one, agg));
  EXPECT_TRUE(is_empty_output(one, agg, true));
}

TEST(Denotation, JsonRoundTrip) {
  Denotation d = rows_of({{std::int64_t(3), 2.5, std::string("x"), Cell{}, true}}, true);
  d.columns = {"a", "b", "c", "d", "e"};
  EXPECT_EQ(denotation_from_json(denotation_to_json(d)), d);
}

TEST(Database, ImageRoundTrip) {
  const auto db = small_db();
  test::TempDir dir("db");
  db.save(dir.path() / "x.sqlite");
  const auto back = DatabaseInstance::load(dir.path() / "x.sqlite", db.schema());
  EXPECT_EQ(back.rows(0), db.rows(0));
  EXPECT_TRUE(db.check_constraints().empty());
}

TEST(Database, ConstraintChecker) {
  Schema s;
  s.db_id = "k";
  s.tables.push_back({"p", {{"id", ColumnType::kInteger}}});
  s.tables.push_back({"c", {{"pid", ColumnType::kInteger}}});
  s.primary_keys.push_back({"p", "id"});
  s.foreign_keys.push_back({{"c", "pid"}, {"p", "id"}});
  const auto good = DatabaseInstance::from_rows(s, {{{std::int64_t(1)}}, {{std::int64_t(1)}}}, {});
  EXPECT_TRUE(good.check_constraints().empty());
  // The engine itself refuses a duplicate key.
  EXPECT_ANY_THROW(DatabaseInstance::from_rows(
      s, {{{std::int64_t(1)}, {std::int64_t(1)}}, {{std::int64_t(1)}}}, {}));
  const auto dangling = DatabaseInstance::from_rows(s, {{{std::int64_t(1)}}, {{std::int64_t(5)}}}, {});
  EXPECT_FALSE(dangling.check_constraints().empty());
}

TEST(Executor, SuccessMatchesInProcess) {
  const auto db = small_db();
  const Executor forked;
  ExecutorOptions io;
  io.isolation = Isolation::kInProcess;
  const Executor inproc(io);
  for (const char* sql : {"SELECT x, y FROM t WHERE x > 3", "SELECT s, count(*) FROM t GROUP BY s",
                          "SELECT avg(y) FROM t", "SELECT x FROM t ORDER BY y DESC LIMIT 3"}) {
    const auto a = forked.execute(sql, db, 5);
    const auto b = inproc.execute(sql, db, 5);
    ASSERT_TRUE(is_success(a)) << describe(a);
    EXPECT_TRUE(compare(ok(a), ok(b))) << sql;
  }
  EXPECT_TRUE(ok(forked.execute("SELECT x FROM t ORDER BY x", db, 5)).ordered);
  EXPECT_FALSE(ok(forked.execute("SELECT x FROM t", db, 5)).ordered);
  EXPECT_EQ(ok(forked.execute("SELECT x FROM t", db, 5)).rows.size(), 20u);
}

TEST(Executor, ErrorsAreInBand) {
  const Executor ex;
  const auto db = small_db();
  EXPECT_TRUE(std::holds_alternative<ExecError>(ex.execute("SELEC x FROM t", db, 5)));
  EXPECT_TRUE(std::holds_alternative<ExecError>(ex.execute("SELECT nope FROM t", db, 5)));
  EXPECT_TRUE(std::holds_alternative<ExecError>(ex.execute("SELECT x FROM t", db, 0)));
}

TEST(Executor, WorkerCrashIsAnError) {
  ExecutorOptions o;
  o.fault_injection = true;
  const Executor ex(o);
  const auto db = small_db();
  EXPECT_TRUE(std::holds_alternative<ExecError>(ex.execute("SELECT gsql_crash()", db, 5)));
  EXPECT_TRUE(is_success(ex.execute("SELECT count(*) FROM t", db, 5)));
}

TEST(Executor, TimeoutWithinBound) {
  const Executor ex;
  const auto db = small_db();
  const auto start = std::chrono::steady_clock::now();
  const auto out = ex.execute(
      "WITH RECURSIVE c(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM c) SELECT count(*) FROM c", db,
      0.5);
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_TRUE(std::holds_alternative<ExecTimeout>(out)) << describe(out);
  EXPECT_LT(took, 1.0);
  EXPECT_DOUBLE_EQ(std::get<ExecTimeout>(out).limit_seconds, 0.5);
  EXPECT_GE(std::get<ExecTimeout>(out).wall_seconds, 0.5);
  EXPECT_LE(std::get<ExecTimeout>(out).wall_seconds, took);
}

TEST(Executor, InProcessTimeout) {
  ExecutorOptions o;
  o.isolation = Isolation::kInProcess;
  const Executor ex(o);
  const auto out = ex.execute(
      "WITH RECURSIVE c(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM c) SELECT count(*) FROM c",
      small_db(), 0.3);
  EXPECT_TRUE(std::holds_alternative<ExecTimeout>(out));
}

TEST(Executor, RowCapBecomesError) {
  ExecutorOptions o;
  o.max_rows = 5;
  const Executor ex(o);
  EXPECT_TRUE(std::holds_alternative<ExecError>(ex.execute("SELECT x FROM t", small_db(), 5)));
}

TEST(Executor, BatchKeepsOrder) {
  ExecutorOptions o;
  o.workers = 3;
  o.fault_injection = true;
  const Executor ex(o);
  const auto db = small_db();
  std::vector<ExecRequest> reqs;
  for (int i = 0; i < 40; ++i) {
    reqs.push_back({i == 17 ? std::string("SELECT gsql_crash()")
                            : "SELECT count(*) FROM t WHERE x <= " + std::to_string(i),
                    &db, 5});
  }
  const auto out = ex.execute_batch(reqs);
  ASSERT_EQ(out.size(), reqs.size());
  for (int i = 0; i < 40; ++i) {
    if (i == 17) {
      EXPECT_FALSE(is_success(out[i]));
      continue;
    }
    EXPECT_EQ(std::get<std::int64_t>(ok(out[i]).rows.at(0).at(0)), std::min(i, 20));
  }
}

TEST(Executor, WorkerCountFromEnvironment) {
  ::setenv("GSQL_WORKERS", "3", 1);
  EXPECT_EQ(default_worker_count(), 3);
  EXPECT_EQ(Executor().workers(), 3);
  ::unsetenv("GSQL_WORKERS");
  EXPECT_GE(default_worker_count(), 1);
}

}  // namespace
}  // namespace gsql
