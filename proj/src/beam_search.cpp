#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "gsql/search.hpp"

namespace gsql {

void CabSchedule::validate() const {
  if (beam_sizes.empty()) throw std::invalid_argument("CAB schedule is empty");
  if (beam_sizes.size() != widths.size()) {
    throw std::invalid_argument("CAB beam sizes and widths differ in length");
  }
  for (size_t i = 0; i < beam_sizes.size(); ++i) {
    if (beam_sizes[i] < 1 || widths[i] < 1) {
      throw std::invalid_argument("CAB beam sizes and widths must be positive");
    }
    if (i && beam_sizes[i] <= beam_sizes[i - 1]) {
      throw std::invalid_argument("CAB beam sizes must increase strictly");
    }
  }
}

CabSchedule CabSchedule::preset(std::string_view name) {
  if (name == "t5") return {{2, 10, 100, 800}, {2, 2, 2, 5}};
  if (name == "bridge") return {{1, 10, 100, 1000}, {1, 2, 2, 5}};
  if (name == "sq-qdmr") return {{1, 100, 1000}, {1, 5, 10}};
  throw std::invalid_argument("unknown CAB preset '" + std::string(name) + "'");
}

std::vector<std::string> cab_preset_names() { return {"t5", "bridge", "sq-qdmr"}; }

CabSchedule CabSchedule::capped(int max_beam) const {
  CabSchedule out;
  for (size_t i = 0; i < beam_sizes.size(); ++i) {
    if (beam_sizes[i] <= max_beam) {
      out.beam_sizes.push_back(beam_sizes[i]);
      out.widths.push_back(widths[i]);
    }
  }
  if (out.beam_sizes.empty()) {
    out.beam_sizes.push_back(std::max(1, max_beam));
    out.widths.push_back(1);
  }
  return out;
}

namespace {

struct Child {
  TokenId token;
  double prob;        // untempered
  double tempered;
};

// Positive-probability tokens, most probable first; ties to the lower id.
std::vector<Child> ranked_children(const Scorer& scorer, std::span<const TokenId> prefix,
                                   double temperature, size_t limit) {
  const Distribution raw = scorer.next_distribution(prefix);
  const Distribution tempered = temperature == 1.0 ? raw : apply_temperature(raw, temperature);
  std::vector<Child> out;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (tempered[i] > 0 && raw[i] > 0) {
      out.push_back({static_cast<TokenId>(i), raw[i], tempered[i]});
    }
  }
  auto better = [](const Child& a, const Child& b) {
    if (a.tempered != b.tempered) return a.tempered > b.tempered;
    return a.token < b.token;
  };
  if (out.size() > limit) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(limit), out.end(),
                      better);
    out.resize(limit);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  return out;
}

bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis greedy_decode(const Scorer& scorer, double temperature) {
  Hypothesis h;
  while (!h.finished) {
    const auto best = ranked_children(scorer, h.tokens, temperature, 1);
    if (best.empty()) {
      // A dead end; close the sequence so callers always get a finished one.
      h.tokens.push_back(scorer.vocab().eos());
      h.log_prob = -INFINITY;
      h.score = -INFINITY;
      h.finished = true;
      break;
    }
    h.tokens.push_back(best.front().token);
    h.log_prob += std::log(best.front().prob);
    h.score += std::log(best.front().tempered);
    h.finished = best.front().token == scorer.vocab().eos();
  }
  return h;
}

std::vector<Hypothesis> beam_search(const Scorer& scorer, int beam_size, int width,
                                    double temperature) {
  if (beam_size < 1 || width < 1) throw std::invalid_argument("beam size and width must be >= 1");
  const TokenId eos = scorer.vocab().eos();
  std::vector<Hypothesis> finished;
  std::vector<Hypothesis> beam(1);
  while (!beam.empty() && static_cast<int>(finished.size()) < beam_size) {
    std::vector<Hypothesis> candidates;
    candidates.reserve(beam.size() * static_cast<size_t>(width));
    for (const auto& h : beam) {
      for (const auto& c : ranked_children(scorer, h.tokens, temperature, static_cast<size_t>(width))) {
        Hypothesis next;
        next.tokens.reserve(h.tokens.size() + 1);
        next.tokens = h.tokens;
        next.tokens.push_back(c.token);
        next.log_prob = h.log_prob + std::log(c.prob);
        next.score = h.score + std::log(c.tempered);
        next.finished = c.token == eos;
        candidates.push_back(std::move(next));
      }
    }
    const size_t keep = static_cast<size_t>(beam_size) - finished.size();
    if (candidates.size() > keep) {
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                        candidates.end(), hypothesis_before);
      candidates.resize(keep);
    } else {
      std::sort(candidates.begin(), candidates.end(), hypothesis_before);
    }
    beam.clear();
    for (auto& c : candidates) {
      if (c.finished) finished.push_back(std::move(c));
      else beam.push_back(std::move(c));
    }
  }
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  return finished;
}

SearchResult cab_search(const Scorer& scorer, const CabSchedule& schedule,
                        const CandidateCheck& check, double temperature) {
  schedule.validate();
  SearchResult result;
  std::set<std::vector<TokenId>> seen;
  for (size_t stage = 0; stage < schedule.beam_sizes.size(); ++stage) {
    const auto hyps =
        beam_search(scorer, schedule.beam_sizes[stage], schedule.widths[stage], temperature);
    for (const auto& h : hyps) {
      if (!seen.insert(h.tokens).second) continue;
      result.tested.push_back(h);
      if (check(h)) {
        result.selected = h;
        result.found_at = schedule.beam_sizes[stage];
        return result;
      }
    }
  }
  return result;
}

}  // namespace gsql
