#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gsql/criteria.hpp"
#include "gsql/executor.hpp"
#include "gsql/query_model.hpp"

namespace gsql {

// Clause-wise structural comparison on our SQL subset ("subset-EM").
// Literal values and the LIMIT value are ignored; select items, FROM
// tables, GROUP BY and AND/OR siblings are compared as multisets;
// ORDER BY keeps its order.
bool exact_set_match(const Query& gold, const Query& pred);
// False when either side fails to parse.
bool exact_set_match(std::string_view gold, std::string_view pred, const Schema& schema);

// Canonical value-free key used by exact_set_match.
std::string exact_match_key(const Query& query);

bool execution_accuracy(std::string_view gold, std::string_view pred, const DatabaseInstance& db,
                        const Executor& executor, double time_limit);

// `suite` holds the original database first; see make_suite_criterion.
bool test_suite_accuracy(std::string_view pred, const criterion::SuiteTest& suite,
                         const Executor& executor, double time_limit);

struct EvalRecord {
  std::string question_id;
  std::string gold;
  std::string predicted;
  bool exact_set_match = false;
  bool execution = false;
  std::optional<bool> test_suite;  // empty when no suite was available
  bool original_in_suite = true;
  bool fallback_used = false;
  bool prediction_error = false;
  bool prediction_timeout = false;
  std::string scorer;
  std::string criterion;
  std::string method;
};

nlohmann::json eval_record_to_json(const EvalRecord& r);

struct ReportCell {
  std::string scorer;
  std::string criterion;
  std::string method;
  int total = 0;
  int exact = 0;
  int execution = 0;
  int test_suite = 0;
  int test_suite_total = 0;  // records with a suite
  int fallbacks = 0;
  int errors = 0;
  int timeouts = 0;

  double em() const { return total ? static_cast<double>(exact) / total : 0.0; }
  double ex() const { return total ? static_cast<double>(execution) / total : 0.0; }
  // Empty when no record of the cell had a suite.
  std::optional<double> ts() const;
};

struct RunReport {
  std::vector<ReportCell> cells;  // sorted by (scorer, criterion, method)
};

RunReport make_report(const std::vector<EvalRecord>& records);

// Aligned table with EM, EX and TS per cell, then the two-metric EX/TS
// layout per criterion.
std::string render_report(const RunReport& report);
nlohmann::json report_to_json(const RunReport& report);

struct CurvePoint {
  int max_beam = 0;
  double execution = 0;
  double test_suite = 0;
  int total = 0;
};
// "max_beam,execution,test_suite,total" with one row per point.
std::string render_curve_csv(const std::vector<CurvePoint>& points);

inline const std::vector<int> kBeamCurveCaps = {1, 10, 100, 800};

}  // namespace gsql
