#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gsql/scorer.hpp"

namespace gsql::testing {

// Random toy model: every prefix gets its own seeded distribution over the
// non-marker tokens and EOS.
inline CallbackScorer random_toy_scorer(int content_tokens, int max_length, std::uint64_t seed,
                                        double eos_weight = 1.0) {
  std::vector<std::string> words;
  for (int i = 0; i < content_tokens; ++i) words.push_back(std::string(1, char('a' + i)));
  Vocabulary vocab(words);
  const TokenId bos = vocab.bos();
  const TokenId eos = vocab.eos();
  const size_t n = vocab.size();
  return CallbackScorer(vocab, max_length, [=](std::span<const TokenId> prefix) {
    std::uint64_t h = seed * 0x9e3779b97f4a7c15ULL + 17;
    for (TokenId t : prefix) h = (h ^ static_cast<std::uint64_t>(t + 1)) * 0x100000001b3ULL;
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Distribution d(n, 0.0);
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      if (static_cast<TokenId>(i) == bos) continue;
      d[i] = u(rng) * (static_cast<TokenId>(i) == eos ? eos_weight : 1.0);
      total += d[i];
    }
    for (double& x : d) x /= total;
    return d;
  });
}

struct Enumerated {
  std::vector<TokenId> tokens;  // ends with EOS
  double log_prob = 0;
};

// Every finished sequence with positive probability, by direct
// multiplication of the stepwise distributions.
inline std::vector<Enumerated> enumerate_sequences(const Scorer& scorer) {
  std::vector<Enumerated> out;
  std::function<void(std::vector<TokenId>&, double)> walk = [&](std::vector<TokenId>& prefix,
                                                                double prob) {
    const Distribution d = scorer.next_distribution(prefix);
    for (size_t i = 0; i < d.size(); ++i) {
      if (d[i] <= 0) continue;
      prefix.push_back(static_cast<TokenId>(i));
      const double p = prob * d[i];
      if (static_cast<TokenId>(i) == scorer.vocab().eos()) {
        out.push_back({prefix, std::log(p)});
      } else {
        walk(prefix, p);
      }
      prefix.pop_back();
    }
  };
  std::vector<TokenId> prefix;
  walk(prefix, 1.0);
  return out;
}

// L binary steps then EOS. Step t prefers "x" with log-odds 2^t * delta,
// so the sequence whose "y" positions spell the integer m (bit t = step t)
// has rank m + 1. Beam search with width 2 is exact on it.
inline CallbackScorer binary_product_scorer(int length, double delta = 0.01) {
  Vocabulary vocab({"x", "y"});
  const TokenId x = vocab.id("x");
  const TokenId y = vocab.id("y");
  const TokenId eos = vocab.eos();
  const size_t n = vocab.size();
  return CallbackScorer(vocab, length + 1, [=](std::span<const TokenId> prefix) {
    Distribution d(n, 0.0);
    if (static_cast<int>(prefix.size()) >= length) {
      d[static_cast<size_t>(eos)] = 1.0;
      return d;
    }
    const double w = std::ldexp(delta, static_cast<int>(prefix.size()));
    d[static_cast<size_t>(x)] = 1.0 / (1.0 + std::exp(-w));
    d[static_cast<size_t>(y)] = 1.0 - d[static_cast<size_t>(x)];
    return d;
  });
}

// Tokens (EOS included) of the rank-r sequence of binary_product_scorer.
inline std::vector<TokenId> binary_rank_sequence(const Scorer& scorer, int length, int rank) {
  std::vector<TokenId> out;
  const auto m = static_cast<unsigned>(rank - 1);
  for (int t = 0; t < length; ++t) {
    out.push_back(scorer.vocab().id((m >> t) & 1u ? "y" : "x"));
  }
  out.push_back(scorer.vocab().eos());
  return out;
}

}  // namespace gsql::testing
