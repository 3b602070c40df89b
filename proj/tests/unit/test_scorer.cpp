#include <boost/multiprecision/cpp_dec_float.hpp>
#include <numeric>

#include "gsql/scorer.hpp"
#include "gsql/search.hpp"
#include "gsql/sql_lexer.hpp"
#include "test_util.hpp"

namespace gsql {
namespace {

using Big = boost::multiprecision::cpp_dec_float_50;

std::vector<std::vector<std::string>> split_all(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  for (const auto& l : lines) out.push_back(tokenize_sql(l));
  return out;
}

double sum(const Distribution& d) { return std::accumulate(d.begin(), d.end(), 0.0); }

TEST(Vocabulary, MarkersAndLookup) {
  Vocabulary v({"x", "y"});
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(v.bos()), kBos);
  EXPECT_EQ(v.token(v.eos()), kEos);
  EXPECT_THROW(v.id("z"), UnknownToken);
  EXPECT_EQ(v.decode(v.encode({"x", "y"})), (std::vector<std::string>{"x", "y"}));
}

TEST(Ngram, SingleContinuation) {
  const auto m = NgramScorer::train({{"a", "b"}}, 2, 1e-9);
  const auto d = m.next_distribution(std::vector<TokenId>{m.vocab().id("a")});
  EXPECT_NEAR(d[static_cast<size_t>(m.vocab().id("b"))], 1.0, 1e-8);
}

TEST(Ngram, Symmetry) {
  const auto m = NgramScorer::train({{"a", "b"}, {"a", "c"}}, 2, 1e-9);
  const auto d = m.next_distribution(std::vector<TokenId>{m.vocab().id("a")});
  EXPECT_NEAR(d[static_cast<size_t>(m.vocab().id("b"))], 0.5, 1e-8);
  EXPECT_NEAR(d[static_cast<size_t>(m.vocab().id("c"))], 0.5, 1e-8);
}

TEST(Ngram, Errors) {
  EXPECT_THROW(NgramScorer::train({}, 2, 0.1), EmptyCorpus);
  EXPECT_THROW(NgramScorer::train({{"a"}}, 0, 0.1), std::invalid_argument);
  EXPECT_THROW(NgramScorer::train({{"a"}}, 2, 0.0), std::invalid_argument);
}

// Independent count table built over strings, then add-alpha by hand.
TEST(Ngram, MatchesHandCountedOracle) {
  const std::vector<std::string> lines = {
      "SELECT count ( * ) FROM singer", "SELECT name FROM singer WHERE age > 20",
      "SELECT name , age FROM singer", "SELECT count ( * ) FROM concert",
      "SELECT name FROM stadium WHERE capacity > 20"};
  const auto corpus = split_all(lines);
  std::set<std::string> words;
  for (const auto& s : corpus) words.insert(s.begin(), s.end());
  for (int order : {1, 2, 3, 5}) {
    for (double alpha : {1e-3, 0.5, 2.0}) {
      const auto m = NgramScorer::train(corpus, order, alpha);
      std::map<std::vector<std::string>, std::map<std::string, double>> table;
      for (const auto& s : corpus) {
        std::vector<std::string> padded(static_cast<size_t>(order - 1), std::string(kBos));
        padded.insert(padded.end(), s.begin(), s.end());
        padded.push_back(std::string(kEos));
        for (size_t i = static_cast<size_t>(order - 1); i < padded.size(); ++i) {
          std::vector<std::string> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - (order - 1)),
                                       padded.begin() + static_cast<std::ptrdiff_t>(i));
          table[ctx][padded[i]] += 1;
        }
      }
      const double predictable = static_cast<double>(words.size() + 1);
      for (const auto& s : corpus) {
        for (size_t len = 0; len <= s.size(); ++len) {
          std::vector<std::string> prefix(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(len));
          std::vector<std::string> ctx(static_cast<size_t>(order - 1), std::string(kBos));
          ctx.insert(ctx.end(), prefix.begin(), prefix.end());
          ctx.erase(ctx.begin(), ctx.end() - (order - 1));
          const auto& row = table[ctx];
          double total = 0;
          for (const auto& [w, c] : row) total += c;
          const auto d = m.next_distribution(m.vocab().encode(prefix));
          ASSERT_NEAR(sum(d), 1.0, 1e-9);
          EXPECT_EQ(d[static_cast<size_t>(m.vocab().bos())], 0.0);
          for (const auto& tok : m.vocab().tokens()) {
            if (tok == kBos) continue;
            const double c = row.count(tok) ? row.at(tok) : 0.0;
            const double want = (c + alpha) / (total + alpha * predictable);
            EXPECT_NEAR(d[static_cast<size_t>(m.vocab().id(tok))], want, 1e-12)
                << "order " << order << " alpha " << alpha << " token " << tok;
          }
          std::vector<TokenId> cids(m.vocab().encode(prefix));
          EXPECT_DOUBLE_EQ(m.context_total(cids), total);
        }
      }
    }
  }
}

TEST(Ngram, WeightsActAsRepeats) {
  const auto corpus = split_all({"a b", "a c"});
  const auto weighted = NgramScorer::train(corpus, 2, 0.1, {3.0, 1.0});
  const auto repeated = NgramScorer::train(split_all({"a b", "a b", "a b", "a c"}), 2, 0.1);
  const std::vector<TokenId> a{weighted.vocab().id("a")};
  EXPECT_EQ(weighted.next_distribution(a), repeated.next_distribution(a));
}

TEST(Ngram, DeterministicBitForBit) {
  const auto corpus = split_all({"SELECT a FROM t", "SELECT b FROM t WHERE a = 1"});
  const auto m1 = NgramScorer::train(corpus, 3, 0.01);
  const auto m2 = NgramScorer::train(corpus, 3, 0.01);
  for (const auto& s : corpus) {
    const auto ids = m1.vocab().encode(s);
    for (size_t i = 0; i <= ids.size(); ++i) {
      const std::span<const TokenId> p(ids.data(), i);
      EXPECT_EQ(m1.next_distribution(p), m2.next_distribution(p));
    }
  }
}

TEST(Scorer, MaxLengthForcesEos) {
  const auto m = NgramScorer::train({{"a", "a", "a"}}, 2, 0.5, {}, 3);
  const std::vector<TokenId> two{m.vocab().id("a"), m.vocab().id("a")};
  const auto d = m.next_distribution(two);
  EXPECT_EQ(d[static_cast<size_t>(m.vocab().eos())], 1.0);
  EXPECT_EQ(sum(d), 1.0);
}

TEST(Temperature, Identity) {
  const Distribution d{0.5, 0.3, 0.2};
  const auto t = apply_temperature(d, 1.0);
  for (size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(t[i], d[i], 1e-15);
}

TEST(Temperature, LargeTFlattens) {
  const auto t = apply_temperature({0.9, 0.1}, 1000.0);
  EXPECT_NEAR(t[0], 0.5, 1e-3);
  EXPECT_NEAR(t[1], 0.5, 1e-3);
  EXPECT_NEAR(t[0] - t[1], (std::pow(0.9, 1e-3) - std::pow(0.1, 1e-3)) /
                               (std::pow(0.9, 1e-3) + std::pow(0.1, 1e-3)),
              1e-12);
}

TEST(Temperature, HighPrecisionOracle) {
  const std::vector<std::vector<double>> cases = {{0.9, 0.1}, {0.5, 0.3, 0.15, 0.05}, {1e-12, 1 - 1e-12}};
  for (const auto& d : cases) {
    for (double T : {0.5, 0.75, 2.0, 3.5}) {
      std::vector<Big> powered;
      Big total = 0;
      for (double p : d) {
        powered.push_back(boost::multiprecision::pow(Big(p), Big(1) / Big(T)));
        total += powered.back();
      }
      const auto got = apply_temperature(d, T);
      for (size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(got[i], static_cast<double>(powered[i] / total), 1e-14) << "T=" << T;
      }
    }
  }
  const auto half = apply_temperature({0.9, 0.1}, 2.0);
  EXPECT_NEAR(half[0], 0.7499999999999999, 1e-4);
  EXPECT_NEAR(half[1], 0.2500, 1e-4);
}

TEST(Temperature, PreservesArgmaxAndZeros) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Distribution d(6);
    for (auto& x : d) x = u(rng);
    d[2] = 0;
    const double s = sum(d);
    for (auto& x : d) x /= s;
    const double T = 0.25 + 4 * u(rng);
    const auto t = apply_temperature(d, T);
    EXPECT_EQ(std::max_element(t.begin(), t.end()) - t.begin(),
              std::max_element(d.begin(), d.end()) - d.begin());
    EXPECT_EQ(t[2], 0.0);
    EXPECT_NEAR(sum(t), 1.0, 1e-12);
  }
}

// Direct multiplication of the stepwise probabilities.
TEST(ChainRule, SequenceLogprob) {
  const auto m = NgramScorer::train(split_all({"a b c", "a c", "b c a"}), 2, 0.3);
  const auto& v = m.vocab();
  const std::vector<TokenId> seq{v.id("a"), v.id("c"), v.id("a"), v.eos()};
  double product = 1;
  for (size_t i = 0; i < seq.size(); ++i) {
    product *= m.next_distribution(std::span<const TokenId>(seq.data(), i))[static_cast<size_t>(seq[i])];
  }
  EXPECT_NEAR(sequence_logprob(m, seq), std::log(product), 1e-12);
  EXPECT_NEAR(sequence_logprob(m, std::vector<std::string>{"a", "c", "a"}), std::log(product), 1e-12);
  EXPECT_THROW(sequence_logprob(m, std::vector<std::string>{"zz"}), UnknownToken);
}

TEST(ChainRule, SearchBookkeeping) {
  const auto toy = test::random_toy_scorer(3, 4, 5);
  for (const auto& h : beam_search(toy, 8, 3)) EXPECT_NEAR(h.log_prob, sequence_logprob(toy, h.tokens), 1e-12);
  const auto g = greedy_decode(toy);
  EXPECT_NEAR(g.log_prob, sequence_logprob(toy, g.tokens), 1e-12);
  for (const auto& h : topk_sample(toy, 2, 20, 1.0, 9)) EXPECT_NEAR(h.log_prob, sequence_logprob(toy, h.tokens), 1e-12);
  UniqueRandomizer ur(toy, 4);
  while (auto h = ur.draw()) EXPECT_NEAR(h->log_prob, sequence_logprob(toy, h->tokens), 1e-12);
}

TEST(Replay, RoundTripAndMissingPrefix) {
  const auto m = NgramScorer::train(split_all({"a b", "b a b"}), 2, 0.2, {}, 5);
  std::vector<std::vector<TokenId>> prefixes;
  for (const auto& e : test::enumerate_sequences(m)) {
    for (size_t i = 0; i + 1 < e.tokens.size() && i < 2; ++i) {
      prefixes.emplace_back(e.tokens.begin(), e.tokens.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  test::TempDir dir("replay");
  ReplayScorer::save(dir.path() / "r.jsonl", m, prefixes);
  const auto r = ReplayScorer::load(dir.path() / "r.jsonl");
  EXPECT_EQ(r.vocab().tokens(), m.vocab().tokens());
  EXPECT_EQ(r.max_length(), m.max_length());
  for (const auto& p : prefixes) {
    const auto a = r.next_distribution(p);
    const auto b = m.next_distribution(p);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  }
  const std::vector<TokenId> deep{m.vocab().id("a"), m.vocab().id("a"), m.vocab().id("a")};
  const auto d = r.next_distribution(deep);
  EXPECT_EQ(d[static_cast<size_t>(r.vocab().eos())], 1.0);
}

TEST(Replay, RejectsBadDistribution) {
  test::TempDir dir("replay_bad");
  std::ofstream(dir.path() / "r.jsonl") << R"({"vocab": ["<s>", "</s>", "a"], "max_length": 3})" "\n"
                                        << R"({"prefix": [], "probs": [0.0, 0.2, 0.2]})" "\n";
  EXPECT_ANY_THROW(ReplayScorer::load(dir.path() / "r.jsonl"));
}

}  // namespace
}  // namespace gsql
