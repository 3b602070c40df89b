#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gsql/config.hpp"
#include "gsql/criteria.hpp"
#include "gsql/dataset.hpp"
#include "gsql/metrics.hpp"
#include "gsql/scorer.hpp"

namespace gsql {

inline constexpr const char* kVersion = "0.1.0";

struct WeightedCandidate {
  std::string sql;
  double weight = 1.0;
};

// JSON lines: {"question_id": ..., "candidates": [{"sql": ..., "weight": ...}]}
std::map<std::string, std::vector<WeightedCandidate>> load_candidates(
    const std::filesystem::path& path);
void save_candidates(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::vector<WeightedCandidate>>>& rows);

// n-gram conditioned on the whole prefix; with tiny alpha its ranking of
// full sequences follows the candidate weights.
NgramScorer candidate_scorer(const std::vector<WeightedCandidate>& candidates, double alpha,
                             int order = 0, int max_length = 0);

// Builds the per-question scorer named by the config. Shared state (the
// candidate table or a global n-gram) is loaded once.
class ScorerFactory {
 public:
  explicit ScorerFactory(const ScorerConfig& config);
  std::unique_ptr<Scorer> make(const DatasetExample& example) const;

 private:
  ScorerConfig config_;
  std::map<std::string, std::vector<WeightedCandidate>> candidates_;
  std::shared_ptr<const NgramScorer> global_;
};

std::filesystem::path suite_path(const RunConfig& config, const std::string& question_id);

// Each command returns the process exit code. Per-example failures are
// reported on `err` and do not abort the run.
int cmd_build_suite(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_suite_stats(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_search(const RunConfig& config, std::ostream& out, std::ostream& err);
// Empty `verdicts` means <output_dir>/verdicts.jsonl.
int cmd_evaluate(const RunConfig& config, const std::filesystem::path& verdicts, std::ostream& out,
                 std::ostream& err);
// Runs search + evaluate for every point of the grid under
// <output_dir>/sweep/. Writes sweep.csv, and beam_curve.csv when the only
// axis is search.beam_cap.
int cmd_sweep(const nlohmann::json& config_json, const std::filesystem::path& base_dir,
              const std::vector<std::string>& axes, std::ostream& out, std::ostream& err);

// Runs work(i) for i in [0, n) on `jobs` threads and hands results to
// sink in index order from the calling thread's perspective.
void run_ordered(size_t n, int jobs, const std::function<std::string(size_t)>& work,
                 const std::function<void(size_t, const std::string&)>& sink);

}  // namespace gsql
