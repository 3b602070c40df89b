#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gsql/scorer.hpp"

namespace gsql {

struct CabSchedule {
  std::vector<int> beam_sizes;
  std::vector<int> widths;

  // Throws std::invalid_argument unless non-empty, equal length, positive
  // and strictly increasing in beam size.
  void validate() const;
  // "t5", "bridge" or "sq-qdmr".
  static CabSchedule preset(std::string_view name);
  // Stages whose beam does not exceed `max_beam`; a cap below the first
  // stage leaves the single stage (max_beam, 1).
  CabSchedule capped(int max_beam) const;

  bool operator==(const CabSchedule&) const = default;
};

std::vector<std::string> cab_preset_names();

// Per-step argmax, ties to the lower token id.
Hypothesis greedy_decode(const Scorer& scorer, double temperature = 1.0);

// Each live element proposes its W most probable children; the best
// B - |finished| candidates survive. Finished hypotheses leave the beam.
// Result: all finished hypotheses by score, ties broken by token order.
std::vector<Hypothesis> beam_search(const Scorer& scorer, int beam_size, int width,
                                    double temperature = 1.0);

using CandidateCheck = std::function<bool(const Hypothesis&)>;

struct SearchResult {
  std::optional<Hypothesis> selected;
  std::vector<Hypothesis> tested;  // in test order, each sequence once
  // Beam size of the accepting CAB stage, or total samples drawn when the
  // accepting sampling round ended. 0 when nothing was accepted.
  int found_at = 0;
};

SearchResult cab_search(const Scorer& scorer, const CabSchedule& schedule,
                        const CandidateCheck& check, double temperature = 1.0);

// The sampling RNG. Distributions are computed by hand so samples do not
// depend on the standard library's implementation.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }
  // Index drawn proportionally to non-negative weights.
  size_t categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
};

std::vector<Hypothesis> topk_sample(const Scorer& scorer, int k, int num_samples,
                                    double temperature, std::uint64_t seed);
std::vector<Hypothesis> topp_sample(const Scorer& scorer, double p, int num_samples,
                                    double temperature, std::uint64_t seed);

// Support of one truncated sampling step: token ids, most probable first.
std::vector<TokenId> topk_support(const Distribution& dist, int k);
std::vector<TokenId> topp_support(const Distribution& dist, double p);

enum class SamplingKind { kTopK, kTopP };

struct SamplingConfig {
  SamplingKind kind = SamplingKind::kTopP;
  int k = 0;
  double p = 0.95;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  // Cumulative sample counts at which candidates are tested.
  std::vector<int> rounds;
};

// Draws from one RNG stream; after each round the new distinct samples are
// tested in descending score order.
SearchResult sampling_search(const Scorer& scorer, const SamplingConfig& config,
                             const CandidateCheck& check);

// Sampling without replacement over a lazily expanded prefix trie.
class UniqueRandomizer {
 public:
  UniqueRandomizer(const Scorer& scorer, std::uint64_t seed, double temperature = 1.0);
  ~UniqueRandomizer();
  UniqueRandomizer(const UniqueRandomizer&) = delete;
  UniqueRandomizer& operator=(const UniqueRandomizer&) = delete;

  bool exhausted() const;
  // Returns nullopt once every sequence has been drawn.
  std::optional<Hypothesis> draw();
  // Mass not yet drawn below the root; 1 before the first draw.
  double residual_mass() const;
  // Residual mass below `prefix`, which must already be in the trie.
  double residual_mass(std::span<const TokenId> prefix) const;
  int draws() const { return draws_; }

 private:
  struct Node;
  const Scorer& scorer_;
  double temperature_;
  SplitRng rng_;
  std::unique_ptr<Node> root_;
  int draws_ = 0;
};

// Draws until acceptance, exhaustion or `max_iterations`. `rounds` lists
// cumulative draw counts after which candidates are tested; empty means
// test after every draw.
SearchResult unique_randomizer_sample(UniqueRandomizer& state, int max_iterations,
                                      const CandidateCheck& check,
                                      const std::vector<int>& rounds = {});

}  // namespace gsql
