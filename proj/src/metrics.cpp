#include "gsql/metrics.hpp"

#include <algorithm>

namespace gsql {

namespace {

std::string column_key(const ColumnRef& c) {
  if (c.is_star()) return "*";
  std::string out = c.table + "." + c.column;
  if (c.instance > 0) out += "#" + std::to_string(c.instance);
  return out;
}

std::string value_key(const ValueExpr& v) {
  std::string out(aggregator_name(v.agg));
  out += "(";
  if (v.distinct) out += "distinct ";
  out += column_key(v.column);
  return out + ")";
}

std::string joined_sorted(std::vector<std::string> parts) {
  std::sort(parts.begin(), parts.end());
  std::string out = "[";
  for (const auto& p : parts) out += p + ";";
  return out + "]";
}

std::string query_key(const Query& q);

std::string predicate_key(const Predicate& p) {
  if (const auto* c = std::get_if<Comparison>(&p.node)) {
    std::string out = value_key(c->lhs) + " " + std::string(compare_op_symbol(c->op)) + " ";
    if (std::holds_alternative<Literal>(c->rhs)) return out + "<value>";
    if (const auto* col = std::get_if<ColumnRef>(&c->rhs)) return out + column_key(*col);
    return out + "(" + query_key(*std::get<Box<Query>>(c->rhs)) + ")";
  }
  if (const auto* in = std::get_if<InSubquery>(&p.node)) {
    return value_key(in->lhs) + (in->negated ? " not in (" : " in (") + query_key(*in->subquery) + ")";
  }
  const auto& l = std::get<Logical>(p.node);
  std::vector<std::string> parts;
  for (const auto& child : l.children) parts.push_back(predicate_key(child));
  return (l.op == LogicalOp::kAnd ? "and" : "or") + joined_sorted(std::move(parts));
}

std::string core_key(const SelectCore& core) {
  std::vector<std::string> items, tables, joins, groups;
  for (const auto& item : core.items) items.push_back(value_key(item));
  for (const auto& t : core.from) tables.push_back(t.table + "#" + std::to_string(t.instance));
  for (const auto& on : core.join_on) {
    if (on) joins.push_back(predicate_key(*on));
  }
  for (const auto& g : core.group_by) groups.push_back(column_key(g));
  std::string out = core.distinct ? "select distinct" : "select";
  out += joined_sorted(items) + " from" + joined_sorted(tables) + " on" + joined_sorted(joins);
  if (core.where) out += " where " + predicate_key(*core.where);
  out += " group" + joined_sorted(groups);
  if (core.having) out += " having " + predicate_key(*core.having);
  return out;
}

std::string set_op_name(SetOp op) {
  switch (op) {
    case SetOp::kUnion: return "union";
    case SetOp::kIntersect: return "intersect";
    case SetOp::kExcept: return "except";
  }
  return "";
}

std::string query_key(const Query& q) {
  std::string out = core_key(q.core);
  for (const auto& [op, core] : q.compound) out += " " + set_op_name(op) + " {" + core_key(core) + "}";
  if (!q.order_by.empty()) {
    out += " order";
    for (const auto& o : q.order_by) out += " " + value_key(o.expr) + (o.descending ? " desc" : " asc");
  }
  if (q.limit) out += " limit";
  return out;
}

}  // namespace

std::string exact_match_key(const Query& query) { return query_key(query); }

bool exact_set_match(const Query& gold, const Query& pred) {
  return query_key(gold) == query_key(pred);
}

bool exact_set_match(std::string_view gold, std::string_view pred, const Schema& schema) {
  try {
    return exact_set_match(parse_query(gold, schema), parse_query(pred, schema));
  } catch (const QueryError&) {
    return false;
  }
}

bool execution_accuracy(std::string_view gold, std::string_view pred, const DatabaseInstance& db,
                        const Executor& executor, double time_limit) {
  const auto outcomes = executor.execute_batch(
      {{std::string(gold), &db, time_limit}, {std::string(pred), &db, time_limit}});
  const Denotation* g = denotation_of(outcomes[0]);
  const Denotation* p = denotation_of(outcomes[1]);
  return g && p && compare(*g, *p);
}

bool test_suite_accuracy(std::string_view pred, const criterion::SuiteTest& suite,
                         const Executor& executor, double time_limit) {
  CheckContext ctx;
  ctx.executor = &executor;
  ctx.time_limit = time_limit;
  return check(SearchCriterion{suite}, std::string(pred), ctx);
}

nlohmann::json eval_record_to_json(const EvalRecord& r) {
  nlohmann::json j = {{"question_id", r.question_id},
                      {"gold", r.gold},
                      {"predicted", r.predicted},
                      {"exact_set_match", r.exact_set_match},
                      {"execution", r.execution},
                      {"original_in_suite", r.original_in_suite},
                      {"fallback_used", r.fallback_used},
                      {"prediction_error", r.prediction_error},
                      {"prediction_timeout", r.prediction_timeout},
                      {"scorer", r.scorer},
                      {"criterion", r.criterion},
                      {"method", r.method}};
  j["test_suite"] = r.test_suite ? nlohmann::json(*r.test_suite) : nlohmann::json(nullptr);
  return j;
}

std::optional<double> ReportCell::ts() const {
  if (test_suite_total == 0) return std::nullopt;
  return static_cast<double>(test_suite) / test_suite_total;
}

RunReport make_report(const std::vector<EvalRecord>& records) {
  std::map<std::tuple<std::string, std::string, std::string>, ReportCell> cells;
  for (const auto& r : records) {
    ReportCell& c = cells[{r.scorer, r.criterion, r.method}];
    c.scorer = r.scorer;
    c.criterion = r.criterion;
    c.method = r.method;
    ++c.total;
    c.exact += r.exact_set_match;
    c.execution += r.execution;
    if (r.test_suite) {
      ++c.test_suite_total;
      c.test_suite += *r.test_suite;
    }
    c.fallbacks += r.fallback_used;
    c.errors += r.prediction_error;
    c.timeouts += r.prediction_timeout;
  }
  RunReport report;
  for (auto& [key, cell] : cells) report.cells.push_back(std::move(cell));
  return report;
}

namespace {

std::string percent(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

}  // namespace

std::string render_report(const RunReport& report) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof line, "%-12s %-12s %-18s %6s %8s %6s %6s %9s %6s %8s\n", "scorer",
                "criterion", "method", "N", "subEM", "EX", "TS", "fallback", "error", "timeout");
  out += line;
  for (const auto& c : report.cells) {
    std::snprintf(line, sizeof line, "%-12s %-12s %-18s %6d %8s %6s %6s %9d %6d %8d\n",
                  c.scorer.c_str(), c.criterion.c_str(), c.method.c_str(), c.total,
                  percent(c.em()).c_str(), percent(c.ex()).c_str(), percent(c.ts()).c_str(),
                  c.fallbacks, c.errors, c.timeouts);
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof line, "%-30s %6s %6s\n", "search criterion", "EX", "TS");
  out += line;
  for (const auto& c : report.cells) {
    const std::string name = c.criterion + " (" + c.method + ")";
    std::snprintf(line, sizeof line, "%-30s %6s %6s\n", name.c_str(), percent(c.ex()).c_str(),
                  percent(c.ts()).c_str());
    out += line;
  }
  return out;
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json j = {{"scorer", c.scorer},
                        {"criterion", c.criterion},
                        {"method", c.method},
                        {"total", c.total},
                        {"exact_set_match", c.em()},
                        {"execution", c.ex()},
                        {"fallbacks", c.fallbacks},
                        {"errors", c.errors},
                        {"timeouts", c.timeouts},
                        {"test_suite_total", c.test_suite_total}};
    const auto ts = c.ts();
    j["test_suite"] = ts ? nlohmann::json(*ts) : nlohmann::json(nullptr);
    cells.push_back(std::move(j));
  }
  return {{"exact_match_flavor", "subset-EM"}, {"cells", cells}};
}

std::string render_curve_csv(const std::vector<CurvePoint>& points) {
  std::string out = "max_beam,execution,test_suite,total\n";
  char line[128];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%d\n", p.max_beam, p.execution, p.test_suite,
                  p.total);
    out += line;
  }
  return out;
}

}  // namespace gsql
