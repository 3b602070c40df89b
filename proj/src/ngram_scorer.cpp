#include <algorithm>
#include <set>

#include "gsql/scorer.hpp"

namespace gsql {

NgramScorer::NgramScorer(Vocabulary vocab, int max_length, int order, double alpha)
    : Scorer(std::move(vocab), max_length), order_(order), alpha_(alpha) {}

NgramScorer NgramScorer::train(const std::vector<std::vector<std::string>>& corpus, int order,
                               double alpha, const std::vector<double>& weights,
                               int max_length) {
  if (corpus.empty()) throw EmptyCorpus("n-gram corpus is empty");
  if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(alpha > 0)) throw std::invalid_argument("smoothing alpha must be > 0");
  if (!weights.empty() && weights.size() != corpus.size()) {
    throw std::invalid_argument("weights must parallel the corpus");
  }
  std::set<std::string> words;
  size_t longest = 0;
  for (const auto& seq : corpus) {
    for (const auto& w : seq) {
      if (w == kBos || w == kEos) throw std::invalid_argument("corpus contains a marker token");
      words.insert(w);
    }
    longest = std::max(longest, seq.size());
  }
  if (max_length <= 0) max_length = static_cast<int>(longest) + 4;

  NgramScorer scorer(Vocabulary(std::vector<std::string>(words.begin(), words.end())),
                     max_length, order, alpha);
  const Vocabulary& vocab = scorer.vocab();
  for (size_t s = 0; s < corpus.size(); ++s) {
    const double weight = weights.empty() ? 1.0 : weights[s];
    if (weight <= 0) continue;
    std::vector<TokenId> ids = vocab.encode(corpus[s]);
    ids.push_back(vocab.eos());
    for (size_t i = 0; i < ids.size(); ++i) {
      Counts& counts = scorer.table_[scorer.context_of(std::span<const TokenId>(ids).first(i))];
      counts.next[ids[i]] += weight;
      counts.total += weight;
    }
  }
  return scorer;
}

std::vector<TokenId> NgramScorer::context_of(std::span<const TokenId> prefix) const {
  // Contexts longer than any prefix carry no extra information.
  const size_t len = static_cast<size_t>(std::min(order_ - 1, max_length() - 1));
  std::vector<TokenId> ctx(len, vocab().bos());
  const size_t take = std::min(len, prefix.size());
  std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

double NgramScorer::count(const std::vector<TokenId>& context, TokenId token) const {
  auto it = table_.find(context_of(context));
  if (it == table_.end()) return 0;
  auto jt = it->second.next.find(token);
  return jt == it->second.next.end() ? 0 : jt->second;
}

double NgramScorer::context_total(const std::vector<TokenId>& context) const {
  auto it = table_.find(context_of(context));
  return it == table_.end() ? 0 : it->second.total;
}

Distribution NgramScorer::distribution_impl(std::span<const TokenId> prefix) const {
  const size_t v = vocab().size();
  const double predictable = static_cast<double>(v - 1);  // BOS excluded
  Distribution d(v, 0.0);
  auto it = table_.find(context_of(prefix));
  const Counts* counts = it == table_.end() ? nullptr : &it->second;
  const double denom = (counts ? counts->total : 0.0) + alpha_ * predictable;
  for (size_t i = 0; i < v; ++i) {
    if (static_cast<TokenId>(i) == vocab().bos()) continue;
    d[i] = alpha_ / denom;
  }
  if (counts) {
    for (const auto& [token, c] : counts->next) d[static_cast<size_t>(token)] += c / denom;
  }
  return d;
}

}  // namespace gsql
