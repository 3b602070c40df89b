#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gsql {

using TokenId = std::int32_t;
using Distribution = std::vector<double>;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

class UnknownToken : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class EmptyCorpus : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Vocabulary {
 public:
  // BOS and EOS are added when missing; other tokens keep their order.
  explicit Vocabulary(std::vector<std::string> tokens);
  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<size_t>(id)); }
  // Throws UnknownToken.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
  // Drops BOS/EOS markers.
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId bos_ = 0;
  TokenId eos_ = 1;
};

// Autoregressive scoring contract. Prefixes never contain BOS. Every
// returned vector spans the whole vocabulary, is non-negative and sums to 1.
class Scorer {
 public:
  Scorer(Vocabulary vocab, int max_length);
  virtual ~Scorer() = default;

  const Vocabulary& vocab() const { return vocab_; }
  // Longest sequence, EOS included. Prefixes of max_length - 1 tokens get
  // an EOS one-hot.
  int max_length() const { return max_length_; }

  Distribution next_distribution(std::span<const TokenId> prefix) const;

 protected:
  virtual Distribution distribution_impl(std::span<const TokenId> prefix) const = 0;
  Distribution eos_one_hot() const;

 private:
  Vocabulary vocab_;
  int max_length_;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // ends with EOS when finished
  double log_prob = 0;          // untempered model log-probability
  double score = 0;             // search score; differs only under temperature
  bool finished = false;

  bool operator==(const Hypothesis&) const = default;
};

// p_i^(1/T), renormalized. Computed in log space.
Distribution apply_temperature(const Distribution& dist, double temperature);

// Sum of stepwise log-probabilities; -inf for impossible sequences.
double sequence_logprob(const Scorer& scorer, std::span<const TokenId> tokens);
double sequence_logprob(const Scorer& scorer, const std::vector<std::string>& tokens);

std::string hypothesis_text(const Scorer& scorer, const Hypothesis& h);

// Adapter for toy models given as a function.
class CallbackScorer : public Scorer {
 public:
  using Fn = std::function<Distribution(std::span<const TokenId>)>;
  CallbackScorer(Vocabulary vocab, int max_length, Fn fn);

 protected:
  Distribution distribution_impl(std::span<const TokenId> prefix) const override;

 private:
  Fn fn_;
};

// Add-alpha n-gram model. Sequences are padded with n-1 BOS markers and
// end with EOS. BOS is never predicted.
class NgramScorer : public Scorer {
 public:
  // Each corpus entry is a token sequence without markers; `weights`
  // (optional, parallel) repeats a sequence. max_length 0 means
  // longest sequence + 4.
  static NgramScorer train(const std::vector<std::vector<std::string>>& corpus, int order,
                           double alpha, const std::vector<double>& weights = {},
                           int max_length = 0);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  // Raw count of `token` after `context` (context length order - 1).
  double count(const std::vector<TokenId>& context, TokenId token) const;
  double context_total(const std::vector<TokenId>& context) const;

 protected:
  Distribution distribution_impl(std::span<const TokenId> prefix) const override;

 private:
  struct Counts {
    std::map<TokenId, double> next;
    double total = 0;
  };
  NgramScorer(Vocabulary vocab, int max_length, int order, double alpha);
  std::vector<TokenId> context_of(std::span<const TokenId> prefix) const;

  int order_;
  double alpha_;
  std::map<std::vector<TokenId>, Counts> table_;
};

// Replays externally computed per-step distributions. File format, one
// JSON object per line:
//   {"vocab": [...], "max_length": L}            first line
//   {"prefix": [ids...], "probs": [p0, p1, ...]} every other line
// An unlisted prefix gets an EOS one-hot.
class ReplayScorer : public Scorer {
 public:
  static ReplayScorer load(const std::filesystem::path& path);
  static void save(const std::filesystem::path& path, const Scorer& scorer,
                   const std::vector<std::vector<TokenId>>& prefixes);

 protected:
  Distribution distribution_impl(std::span<const TokenId> prefix) const override;

 private:
  ReplayScorer(Vocabulary vocab, int max_length);
  std::map<std::vector<TokenId>, Distribution> steps_;
};

}  // namespace gsql
