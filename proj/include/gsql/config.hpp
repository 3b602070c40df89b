#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsql/criteria.hpp"
#include "gsql/testsuite.hpp"
#include "json.hpp"

namespace gsql {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::filesystem::path examples;
  std::filesystem::path tables;
  std::filesystem::path database_dir;
  std::string kind = "multi";  // "multi" (30 s limit) or "single" (300 s)
};

struct ScorerConfig {
  // "candidates": per-question n-gram over weighted candidate queries.
  // "ngram": one n-gram trained on the gold queries of `path`.
  // "replay": <path>/<question_id>.jsonl per question.
  std::string kind = "candidates";
  std::filesystem::path path;
  int order = 0;  // 0: condition on the whole prefix
  double alpha = 1e-6;
  int max_length = 0;
};

struct SearchConfig {
  std::string method = "cab";
  std::string preset = "t5";
  std::optional<CabSchedule> schedule;  // explicit stages win over the preset
  int beam_cap = 0;                     // 0: no cap
  std::uint64_t seed = 0;
  double temperature = 1.0;
  int top_k = 5;
  double top_p = 0.95;
  int max_iterations = 800;
  int beam_size = 10;
  int width = 2;
  bool log_candidates = false;
};

struct CriterionConfig {
  std::string kind = "execution";  // execution | column-match | one-test | test-suite
  std::string column_mode = "multiset";
};

struct RunConfig {
  DatasetConfig dataset;
  ScorerConfig scorer;
  SearchConfig search;
  CriterionConfig criterion;
  SuiteConfig suite;
  std::filesystem::path suite_dir;
  std::optional<double> time_limit;
  int workers = 0;
  int jobs = 1;
  std::filesystem::path output_dir = "out";

  double effective_time_limit() const;
  MethodConfig method_config() const;
};

// Relative paths resolve against `base_dir`. Missing keys keep defaults;
// unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);

// Reads the file (if any), applies "a.b.c=value" overrides, then parses.
// Values are JSON when they parse as JSON, strings otherwise.
nlohmann::json load_config_json(const std::optional<std::filesystem::path>& path,
                                const std::vector<std::string>& overrides);
void apply_override(nlohmann::json& j, const std::string& assignment);

// Throws ConfigError when a path the commands need is missing.
void validate_paths(const RunConfig& config, bool need_scorer, bool need_suites);

// FNV-1a over the canonical JSON, output_dir excluded.
std::string config_hash(const RunConfig& config);
std::uint64_t fnv1a64(std::string_view text);

// "key=a,b,c" or "key=start:stop:step" (inclusive).
struct SweepAxis {
  std::string key;
  std::vector<nlohmann::json> values;
};
SweepAxis parse_sweep(const std::string& spec);

}  // namespace gsql
