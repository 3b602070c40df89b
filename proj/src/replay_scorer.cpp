#include <cmath>
#include <fstream>

#include "gsql/scorer.hpp"
#include "json.hpp"

namespace gsql {

ReplayScorer::ReplayScorer(Vocabulary vocab, int max_length)
    : Scorer(std::move(vocab), max_length) {}

ReplayScorer ReplayScorer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("replay file is empty");
  const auto header = nlohmann::json::parse(line);
  ReplayScorer scorer(Vocabulary(header.at("vocab").get<std::vector<std::string>>()),
                      header.at("max_length").get<int>());
  const size_t v = scorer.vocab().size();
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto rec = nlohmann::json::parse(line);
    auto prefix = rec.at("prefix").get<std::vector<TokenId>>();
    auto probs = rec.at("probs").get<Distribution>();
    if (probs.size() != v) {
      throw std::runtime_error("replay line " + std::to_string(lineno) +
                               ": probability vector does not span the vocabulary");
    }
    double total = 0;
    for (double p : probs) {
      if (p < 0) throw std::runtime_error("replay line " + std::to_string(lineno) + ": negative mass");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-6) {
      throw std::runtime_error("replay line " + std::to_string(lineno) + ": mass sums to " +
                               std::to_string(total));
    }
    if (total != 1.0) {
      for (double& p : probs) p /= total;
    }
    scorer.steps_[std::move(prefix)] = std::move(probs);
  }
  return scorer;
}

void ReplayScorer::save(const std::filesystem::path& path, const Scorer& scorer,
                        const std::vector<std::vector<TokenId>>& prefixes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write replay file " + path.string());
  out << nlohmann::json{{"vocab", scorer.vocab().tokens()}, {"max_length", scorer.max_length()}}
             .dump()
      << "\n";
  for (const auto& prefix : prefixes) {
    out << nlohmann::json{{"prefix", prefix},
                          {"probs", scorer.next_distribution(prefix)}}
               .dump()
        << "\n";
  }
}

Distribution ReplayScorer::distribution_impl(std::span<const TokenId> prefix) const {
  auto it = steps_.find(std::vector<TokenId>(prefix.begin(), prefix.end()));
  if (it == steps_.end()) return eos_one_hot();
  return it->second;
}

}  // namespace gsql
