#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsql/search.hpp"

namespace gsql {

// `mass[i]` is the not-yet-drawn absolute (tempered) probability below
// child i. Children are expanded on first visit; EOS children are leaves.
struct UniqueRandomizer::Node {
  bool expanded = false;
  bool exhausted = false;
  double base = 1.0;  // tempered probability of reaching this node
  std::vector<TokenId> tokens;
  std::vector<double> raw;
  std::vector<double> step;  // tempered conditional probability
  std::vector<double> mass;
  std::vector<bool> done;
  std::vector<std::unique_ptr<Node>> children;
};

UniqueRandomizer::UniqueRandomizer(const Scorer& scorer, std::uint64_t seed, double temperature)
    : scorer_(scorer), temperature_(temperature), rng_(seed), root_(std::make_unique<Node>()) {}

UniqueRandomizer::~UniqueRandomizer() = default;

bool UniqueRandomizer::exhausted() const { return root_->exhausted; }

double UniqueRandomizer::residual_mass() const {
  if (root_->exhausted) return 0.0;
  if (!root_->expanded) return 1.0;
  double total = 0;
  for (size_t i = 0; i < root_->mass.size(); ++i) {
    if (!root_->done[i]) total += root_->mass[i];
  }
  return total;
}

double UniqueRandomizer::residual_mass(std::span<const TokenId> prefix) const {
  const Node* node = root_.get();
  double mass = residual_mass();
  for (TokenId t : prefix) {
    if (!node->expanded) throw std::out_of_range("prefix not in the trie");
    auto it = std::find(node->tokens.begin(), node->tokens.end(), t);
    if (it == node->tokens.end()) return 0.0;
    const size_t i = static_cast<size_t>(it - node->tokens.begin());
    mass = node->done[i] ? 0.0 : node->mass[i];
    if (!node->children[i]) return mass;
    node = node->children[i].get();
  }
  return mass;
}

std::optional<Hypothesis> UniqueRandomizer::draw() {
  if (root_->exhausted) return std::nullopt;
  const TokenId eos = scorer_.vocab().eos();
  Hypothesis h;
  std::vector<std::pair<Node*, size_t>> path;
  Node* node = root_.get();
  while (true) {
    if (!node->expanded) {
      const Distribution raw = scorer_.next_distribution(h.tokens);
      const Distribution tempered =
          temperature_ == 1.0 ? raw : apply_temperature(raw, temperature_);
      for (size_t i = 0; i < raw.size(); ++i) {
        if (tempered[i] > 0 && raw[i] > 0) {
          node->tokens.push_back(static_cast<TokenId>(i));
          node->raw.push_back(raw[i]);
          node->step.push_back(tempered[i]);
          node->mass.push_back(node->base * tempered[i]);
        }
      }
      if (node->tokens.empty()) throw std::logic_error("scorer returned no positive mass");
      node->done.assign(node->tokens.size(), false);
      node->children.resize(node->tokens.size());
      node->expanded = true;
    }
    std::vector<double> weights(node->tokens.size(), 0.0);
    for (size_t i = 0; i < weights.size(); ++i) {
      // Rounding can drive a live branch to zero; keep it reachable.
      if (!node->done[i]) weights[i] = std::max(node->mass[i], 1e-300);
    }
    const size_t pick = rng_.categorical(weights);
    path.emplace_back(node, pick);
    h.tokens.push_back(node->tokens[pick]);
    h.log_prob += std::log(node->raw[pick]);
    h.score += std::log(node->step[pick]);
    if (node->tokens[pick] == eos) break;
    if (!node->children[pick]) {
      node->children[pick] = std::make_unique<Node>();
      node->children[pick]->base = node->base * node->step[pick];
    }
    node = node->children[pick].get();
  }
  h.finished = true;

  // Subtract the drawn sequence's mass along its path.
  const double drawn = path.back().first->mass[path.back().second];
  for (size_t d = path.size(); d-- > 0;) {
    Node* parent = path[d].first;
    const size_t i = path[d].second;
    parent->mass[i] = std::max(0.0, parent->mass[i] - drawn);
    if (d + 1 == path.size() || parent->children[i]->exhausted) {
      parent->done[i] = true;
      parent->mass[i] = 0;
    }
    parent->exhausted =
        std::all_of(parent->done.begin(), parent->done.end(), [](bool x) { return x; });
  }
  ++draws_;
  return h;
}

SearchResult unique_randomizer_sample(UniqueRandomizer& state, int max_iterations,
                                      const CandidateCheck& check,
                                      const std::vector<int>& rounds) {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  SearchResult result;
  std::vector<int> targets;
  if (rounds.empty()) {
    for (int i = 1; i <= max_iterations; ++i) targets.push_back(i);
  } else {
    for (int r : rounds) targets.push_back(std::min(r, max_iterations));
  }
  int drawn = 0;
  for (int target : targets) {
    std::vector<Hypothesis> fresh;
    while (drawn < target && !state.exhausted()) {
      auto h = state.draw();
      if (!h) break;
      ++drawn;
      fresh.push_back(std::move(*h));
    }
    std::sort(fresh.begin(), fresh.end(), [](const Hypothesis& a, const Hypothesis& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.tokens < b.tokens;
    });
    for (auto& h : fresh) {
      result.tested.push_back(h);
      if (check(h)) {
        result.selected = std::move(h);
        result.found_at = drawn;
        return result;
      }
    }
    if (state.exhausted()) break;
  }
  return result;
}

}  // namespace gsql
