#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gsql/executor.hpp"
#include "gsql/query_model.hpp"
#include "gsql/search.hpp"
#include "gsql/testsuite.hpp"

namespace gsql {

namespace criterion {

struct Execution {};

struct ColumnMatch {
  ColumnSignature expected;
  ColumnMatchMode mode = ColumnMatchMode::kMultiset;
};

struct OneTest {
  DatabaseInstance db;
  Denotation expected;
};

// The original database always comes first.
struct SuiteTest {
  std::vector<OneTest> tests;
};

}  // namespace criterion

using SearchCriterion = std::variant<criterion::Execution, criterion::ColumnMatch,
                                     criterion::OneTest, criterion::SuiteTest>;

std::string criterion_name(const SearchCriterion& c);

// Prepends (original, expected) to the suite's databases.
criterion::SuiteTest make_suite_criterion(const TestSuite& suite, const DatabaseInstance& original,
                                          const Denotation& original_expected);

struct CheckContext {
  const Executor* executor = nullptr;
  const Schema* schema = nullptr;
  const DatabaseInstance* input_db = nullptr;
  double time_limit = kMultiDbTimeLimit;
};

// Parse failures, errors and timeouts are all plain `false`.
bool check(const SearchCriterion& c, const std::string& candidate, const CheckContext& ctx);

enum class SearchMethod { kCab, kTopK, kTopP, kUniqueRandomizer, kGreedy, kBeam };
std::string_view method_name(SearchMethod m);
SearchMethod method_from_name(std::string_view name);

struct MethodConfig {
  SearchMethod method = SearchMethod::kCab;
  CabSchedule schedule = CabSchedule::preset("t5");
  double temperature = 1.0;
  int top_k = 5;
  double top_p = 0.95;
  std::uint64_t seed = 0;
  int max_iterations = 800;
  // Plain beam search.
  int beam_size = 10;
  int width = 2;
};

struct SearchVerdict {
  std::string question_id;
  std::string selected;
  std::string greedy;
  bool passed = false;
  int tested = 0;
  bool fallback_used = false;
  int found_at = 0;
  std::string method;
  std::string criterion;
  double wall_seconds = 0;  // never part of the JSON record

  bool operator==(const SearchVerdict& o) const;
};

nlohmann::json verdict_to_json(const SearchVerdict& v);
SearchVerdict verdict_from_json(const nlohmann::json& j);

struct TestedCandidate {
  std::string text;
  bool passed = false;
};

// Searches with `check` as the callback; falls back to the greedy decode.
// Each distinct candidate text is checked once.
SearchVerdict guided_search(const std::string& question_id, const Scorer& scorer,
                            const MethodConfig& method, const SearchCriterion& criterion,
                            const CheckContext& ctx,
                            std::vector<TestedCandidate>* tested = nullptr);

}  // namespace gsql
