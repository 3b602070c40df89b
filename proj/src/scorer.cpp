#include <algorithm>
#include <cmath>
#include <limits>

#include "gsql/scorer.hpp"
#include "gsql/sql_lexer.hpp"

namespace gsql {

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  auto add = [&](const std::string& t) {
    if (index_.count(t)) return;
    index_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(t);
  };
  const bool has_markers = std::find(tokens.begin(), tokens.end(), kBos) != tokens.end() &&
                           std::find(tokens.begin(), tokens.end(), kEos) != tokens.end();
  if (!has_markers) {
    add(std::string(kBos));
    add(std::string(kEos));
  }
  for (auto& t : tokens) add(t);
  bos_ = index_.at(std::string(kBos));
  eos_ = index_.at(std::string(kEos));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw UnknownToken("unknown token '" + std::string(token) + "'");
  return it->second;
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id == bos_ || id == eos_) continue;
    out.push_back(token(id));
  }
  return out;
}

Scorer::Scorer(Vocabulary vocab, int max_length)
    : vocab_(std::move(vocab)), max_length_(std::max(1, max_length)) {}

Distribution Scorer::eos_one_hot() const {
  Distribution d(vocab_.size(), 0.0);
  d[static_cast<size_t>(vocab_.eos())] = 1.0;
  return d;
}

Distribution Scorer::next_distribution(std::span<const TokenId> prefix) const {
  if (static_cast<int>(prefix.size()) + 1 >= max_length_) return eos_one_hot();
  if (!prefix.empty() && prefix.back() == vocab_.eos()) return eos_one_hot();
  Distribution d = distribution_impl(prefix);
  if (d.size() != vocab_.size()) {
    throw std::logic_error("scorer returned a distribution of the wrong size");
  }
  return d;
}

Distribution apply_temperature(const Distribution& dist, double temperature) {
  if (temperature == 1.0) return dist;
  const double inv = 1.0 / temperature;
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(dist.size(), -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0) {
      logs[i] = std::log(dist[i]) * inv;
      max_log = std::max(max_log, logs[i]);
    }
  }
  Distribution out(dist.size(), 0.0);
  if (!std::isfinite(max_log)) return out;
  double total = 0;
  for (size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0) {
      out[i] = std::exp(logs[i] - max_log);
      total += out[i];
    }
  }
  for (auto& p : out) p /= total;
  return out;
}

double sequence_logprob(const Scorer& scorer, std::span<const TokenId> tokens) {
  double total = 0;
  const auto vsize = static_cast<TokenId>(scorer.vocab().size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || tokens[i] >= vsize) {
      throw UnknownToken("token id " + std::to_string(tokens[i]) + " outside the vocabulary");
    }
    const Distribution d = scorer.next_distribution(tokens.first(i));
    const double p = d[static_cast<size_t>(tokens[i])];
    if (p <= 0) return -std::numeric_limits<double>::infinity();
    total += std::log(p);
  }
  return total;
}

double sequence_logprob(const Scorer& scorer, const std::vector<std::string>& tokens) {
  std::vector<TokenId> ids = scorer.vocab().encode(tokens);
  if (ids.empty() || ids.back() != scorer.vocab().eos()) ids.push_back(scorer.vocab().eos());
  return sequence_logprob(scorer, std::span<const TokenId>(ids));
}

std::string hypothesis_text(const Scorer& scorer, const Hypothesis& h) {
  const auto words = scorer.vocab().decode(h.tokens);
  return detokenize_sql(words);
}

CallbackScorer::CallbackScorer(Vocabulary vocab, int max_length, Fn fn)
    : Scorer(std::move(vocab), max_length), fn_(std::move(fn)) {}

Distribution CallbackScorer::distribution_impl(std::span<const TokenId> prefix) const {
  return fn_(prefix);
}

}  // namespace gsql
