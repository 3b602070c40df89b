#include "gsql/criteria.hpp"

#include <chrono>
#include <map>

namespace gsql {

std::string criterion_name(const SearchCriterion& c) {
  switch (c.index()) {
    case 0: return "execution";
    case 1: return "column-match";
    case 2: return "one-test";
    default: return "test-suite";
  }
}

criterion::SuiteTest make_suite_criterion(const TestSuite& suite, const DatabaseInstance& original,
                                          const Denotation& original_expected) {
  criterion::SuiteTest out;
  out.tests.push_back({original, original_expected});
  for (const auto& entry : suite.databases) out.tests.push_back({entry.db, entry.gold});
  return out;
}

namespace {

bool passes(const ExecutionOutcome& outcome, const Denotation& expected) {
  const Denotation* got = denotation_of(outcome);
  return got && compare(*got, expected);
}

}  // namespace

bool check(const SearchCriterion& c, const std::string& candidate, const CheckContext& ctx) {
  if (const auto* cols = std::get_if<criterion::ColumnMatch>(&c)) {
    if (!ctx.schema) return false;
    try {
      return column_signature(parse_query(candidate, *ctx.schema)).matches(cols->expected, cols->mode);
    } catch (const QueryError&) {
      return false;
    }
  }
  if (!ctx.executor) return false;
  if (std::holds_alternative<criterion::Execution>(c)) {
    if (!ctx.input_db) return false;
    return is_success(ctx.executor->execute(candidate, *ctx.input_db, ctx.time_limit));
  }
  if (const auto* one = std::get_if<criterion::OneTest>(&c)) {
    return passes(ctx.executor->execute(candidate, one->db, ctx.time_limit), one->expected);
  }
  const auto& suite = std::get<criterion::SuiteTest>(c);
  if (suite.tests.empty()) return false;
  // Most candidates already fail on the first database; try it alone.
  if (!passes(ctx.executor->execute(candidate, suite.tests.front().db, ctx.time_limit),
              suite.tests.front().expected)) {
    return false;
  }
  std::vector<ExecRequest> requests;
  for (size_t i = 1; i < suite.tests.size(); ++i) {
    requests.push_back({candidate, &suite.tests[i].db, ctx.time_limit});
  }
  const auto outcomes = ctx.executor->execute_batch(requests);
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (!passes(outcomes[i], suite.tests[i + 1].expected)) return false;
  }
  return true;
}

std::string_view method_name(SearchMethod m) {
  switch (m) {
    case SearchMethod::kCab: return "cab";
    case SearchMethod::kTopK: return "topk";
    case SearchMethod::kTopP: return "topp";
    case SearchMethod::kUniqueRandomizer: return "unique_randomizer";
    case SearchMethod::kGreedy: return "greedy";
    case SearchMethod::kBeam: return "beam";
  }
  return "cab";
}

SearchMethod method_from_name(std::string_view name) {
  for (auto m : {SearchMethod::kCab, SearchMethod::kTopK, SearchMethod::kTopP,
                 SearchMethod::kUniqueRandomizer, SearchMethod::kGreedy, SearchMethod::kBeam}) {
    if (method_name(m) == name) return m;
  }
  if (name == "ur") return SearchMethod::kUniqueRandomizer;
  throw std::invalid_argument("unknown search method '" + std::string(name) + "'");
}

bool SearchVerdict::operator==(const SearchVerdict& o) const {
  return question_id == o.question_id && selected == o.selected && greedy == o.greedy &&
         passed == o.passed && tested == o.tested && fallback_used == o.fallback_used &&
         found_at == o.found_at && method == o.method && criterion == o.criterion;
}

nlohmann::json verdict_to_json(const SearchVerdict& v) {
  return {{"question_id", v.question_id}, {"selected", v.selected},
          {"greedy", v.greedy},           {"passed", v.passed},
          {"tested", v.tested},           {"fallback_used", v.fallback_used},
          {"found_at", v.found_at},       {"method", v.method},
          {"criterion", v.criterion}};
}

SearchVerdict verdict_from_json(const nlohmann::json& j) {
  SearchVerdict v;
  v.question_id = j.at("question_id").get<std::string>();
  v.selected = j.at("selected").get<std::string>();
  v.greedy = j.value("greedy", v.selected);
  v.passed = j.value("passed", false);
  v.tested = j.value("tested", 0);
  v.fallback_used = j.value("fallback_used", !v.passed);
  v.found_at = j.value("found_at", 0);
  v.method = j.value("method", "");
  v.criterion = j.value("criterion", "");
  return v;
}

SearchVerdict guided_search(const std::string& question_id, const Scorer& scorer,
                            const MethodConfig& method, const SearchCriterion& criterion,
                            const CheckContext& ctx, std::vector<TestedCandidate>* tested) {
  const auto start = std::chrono::steady_clock::now();
  std::map<std::string, bool> memo;
  auto callback = [&](const Hypothesis& h) {
    const std::string text = hypothesis_text(scorer, h);
    auto it = memo.find(text);
    if (it != memo.end()) return it->second;
    const bool ok = check(criterion, text, ctx);
    memo.emplace(text, ok);
    if (tested) tested->push_back({text, ok});
    return ok;
  };

  const Hypothesis greedy = greedy_decode(scorer, 1.0);
  SearchResult result;
  switch (method.method) {
    case SearchMethod::kCab:
      result = cab_search(scorer, method.schedule, callback, method.temperature);
      break;
    case SearchMethod::kTopK:
    case SearchMethod::kTopP: {
      SamplingConfig sc;
      sc.kind = method.method == SearchMethod::kTopK ? SamplingKind::kTopK : SamplingKind::kTopP;
      sc.k = method.top_k;
      sc.p = method.top_p;
      sc.temperature = method.temperature;
      sc.seed = method.seed;
      sc.rounds = method.schedule.beam_sizes;
      result = sampling_search(scorer, sc, callback);
      break;
    }
    case SearchMethod::kUniqueRandomizer: {
      UniqueRandomizer state(scorer, method.seed, method.temperature);
      result = unique_randomizer_sample(state, method.max_iterations, callback,
                                        method.schedule.beam_sizes);
      break;
    }
    case SearchMethod::kGreedy:
      result.tested.push_back(greedy);
      if (callback(greedy)) {
        result.selected = greedy;
        result.found_at = 1;
      }
      break;
    case SearchMethod::kBeam: {
      for (const auto& h : beam_search(scorer, method.beam_size, method.width, method.temperature)) {
        result.tested.push_back(h);
        if (callback(h)) {
          result.selected = h;
          result.found_at = method.beam_size;
          break;
        }
      }
      break;
    }
  }

  SearchVerdict v;
  v.question_id = question_id;
  v.greedy = hypothesis_text(scorer, greedy);
  v.passed = result.selected.has_value();
  v.fallback_used = !v.passed;
  v.selected = v.passed ? hypothesis_text(scorer, *result.selected) : v.greedy;
  v.tested = static_cast<int>(result.tested.size());
  v.found_at = result.found_at;
  v.method = std::string(method_name(method.method));
  v.criterion = criterion_name(criterion);
  v.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return v;
}

}  // namespace gsql
