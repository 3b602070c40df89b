#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "gsql/search.hpp"

namespace gsql {

size_t SplitRng::categorical(const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) total += std::max(0.0, w);
  if (!(total > 0)) throw std::invalid_argument("categorical over zero mass");
  const double target = uniform01() * total;
  double acc = 0;
  size_t last = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last = i;
    if (target < acc) return i;
  }
  return last;
}

namespace {

std::vector<TokenId> by_probability(const Distribution& dist) {
  std::vector<TokenId> ids;
  for (size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0) ids.push_back(static_cast<TokenId>(i));
  }
  std::stable_sort(ids.begin(), ids.end(),
                   [&](TokenId a, TokenId b) { return dist[a] > dist[b]; });
  return ids;
}

// One sequence; `support` truncates each tempered step distribution.
template <class Support>
Hypothesis sample_one(const Scorer& scorer, double temperature, SplitRng& rng,
                      const Support& support) {
  Hypothesis h;
  const TokenId eos = scorer.vocab().eos();
  while (!h.finished) {
    const Distribution raw = scorer.next_distribution(h.tokens);
    const Distribution tempered = temperature == 1.0 ? raw : apply_temperature(raw, temperature);
    const std::vector<TokenId> kept = support(tempered);
    TokenId token = eos;
    if (!kept.empty()) {
      std::vector<double> weights;
      weights.reserve(kept.size());
      for (TokenId t : kept) weights.push_back(tempered[static_cast<size_t>(t)]);
      token = kept[rng.categorical(weights)];
    }
    h.tokens.push_back(token);
    const double p = raw[static_cast<size_t>(token)];
    const double q = tempered[static_cast<size_t>(token)];
    h.log_prob += p > 0 ? std::log(p) : -INFINITY;
    h.score += q > 0 ? std::log(q) : -INFINITY;
    h.finished = token == eos;
  }
  return h;
}

bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

std::vector<TokenId> topk_support(const Distribution& dist, int k) {
  if (k < 1) throw std::invalid_argument("top-k needs k >= 1");
  std::vector<TokenId> ids = by_probability(dist);
  if (ids.size() > static_cast<size_t>(k)) ids.resize(static_cast<size_t>(k));
  return ids;
}

std::vector<TokenId> topp_support(const Distribution& dist, double p) {
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("top-p needs 0 < p <= 1");
  std::vector<TokenId> ids = by_probability(dist);
  double total = 0;
  for (TokenId t : ids) total += dist[static_cast<size_t>(t)];
  double acc = 0;
  size_t n = 0;
  while (n < ids.size()) {
    acc += dist[static_cast<size_t>(ids[n])];
    ++n;
    // Small slack so p = 1 keeps exactly the positive-mass tokens.
    if (acc >= p * total - 1e-12) break;
  }
  ids.resize(n);
  return ids;
}

std::vector<Hypothesis> topk_sample(const Scorer& scorer, int k, int num_samples,
                                    double temperature, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("top-k needs k >= 1");
  SplitRng rng(seed);
  std::vector<Hypothesis> out;
  out.reserve(static_cast<size_t>(std::max(0, num_samples)));
  auto support = [k](const Distribution& d) { return topk_support(d, k); };
  for (int i = 0; i < num_samples; ++i) out.push_back(sample_one(scorer, temperature, rng, support));
  return out;
}

std::vector<Hypothesis> topp_sample(const Scorer& scorer, double p, int num_samples,
                                    double temperature, std::uint64_t seed) {
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("top-p needs 0 < p <= 1");
  SplitRng rng(seed);
  std::vector<Hypothesis> out;
  out.reserve(static_cast<size_t>(std::max(0, num_samples)));
  auto support = [p](const Distribution& d) { return topp_support(d, p); };
  for (int i = 0; i < num_samples; ++i) out.push_back(sample_one(scorer, temperature, rng, support));
  return out;
}

SearchResult sampling_search(const Scorer& scorer, const SamplingConfig& config,
                             const CandidateCheck& check) {
  if (config.rounds.empty()) throw std::invalid_argument("sampling needs at least one round");
  if (config.kind == SamplingKind::kTopK && config.k < 1) {
    throw std::invalid_argument("top-k needs k >= 1");
  }
  SplitRng rng(config.seed);
  SearchResult result;
  std::set<std::vector<TokenId>> seen;
  int drawn = 0;
  for (int target : config.rounds) {
    std::vector<Hypothesis> fresh;
    while (drawn < target) {
      Hypothesis h = config.kind == SamplingKind::kTopK
                         ? sample_one(scorer, config.temperature, rng,
                                      [&](const Distribution& d) { return topk_support(d, config.k); })
                         : sample_one(scorer, config.temperature, rng,
                                      [&](const Distribution& d) { return topp_support(d, config.p); });
      ++drawn;
      if (seen.insert(h.tokens).second) fresh.push_back(std::move(h));
    }
    std::sort(fresh.begin(), fresh.end(), hypothesis_before);
    for (auto& h : fresh) {
      result.tested.push_back(h);
      if (check(h)) {
        result.selected = std::move(h);
        result.found_at = target;
        return result;
      }
    }
  }
  return result;
}

}  // namespace gsql
