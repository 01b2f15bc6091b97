#include "dsen/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dsen/grad_check.h"

namespace dsen {
namespace {

using ListKey = std::pair<std::uint32_t, std::uint32_t>;  // (user, day)

double Discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

PairScorer ModelScorer(const Model& model, const Dataset& dataset, std::size_t batch_size) {
  if (batch_size == 0) throw ContractError("scorer batch size must be >= 1");
  return [&model, &dataset, batch_size](std::span<const Sample> pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
      const auto chunk = pairs.subspan(start, std::min(batch_size, pairs.size() - start));
      const std::vector<double> p = model.Predict(dataset.Batch(chunk));
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  };
}

RankedSuggestions RankCandidates(std::uint32_t user, std::uint32_t day,
                                 std::span<const std::uint32_t> candidates,
                                 std::span<const double> scores) {
  if (candidates.empty()) {
    throw ContractError("rank: empty candidate set for user " + std::to_string(user));
  }
  if (scores.size() != candidates.size()) {
    throw ContractError(fmt::format("rank: {} scores for {} candidates", scores.size(),
                                    candidates.size()));
  }
  RankedSuggestions out{user, day, {}};
  out.items.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw EvaluationError(fmt::format("rank: non-finite score for candidate {} of user {}",
                                        candidates[i], user));
    }
    out.items.push_back({candidates[i], scores[i]});
  }
  std::sort(out.items.begin(), out.items.end(),
            [](const ScoredCandidate& a, const ScoredCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.candidate < b.candidate;
            });
  return out;
}

RankedSuggestions RankCandidates(std::uint32_t user, std::uint32_t day,
                                 std::span<const std::uint32_t> candidates,
                                 const PairScorer& scorer) {
  if (candidates.empty()) {
    throw ContractError("rank: empty candidate set for user " + std::to_string(user));
  }
  std::vector<Sample> pairs;
  pairs.reserve(candidates.size());
  for (std::uint32_t c : candidates) pairs.push_back({user, c, day, 0, Split::kTest});
  return RankCandidates(user, day, candidates, scorer(pairs));
}

std::vector<std::vector<std::size_t>> PositiveRanks(std::span<const RankedSuggestions> lists,
                                                    std::span<const Positive> positives) {
  std::map<ListKey, std::size_t> index;
  for (std::size_t i = 0; i < lists.size(); ++i) index[{lists[i].user, lists[i].day}] = i;
  std::vector<std::vector<std::size_t>> ranks(lists.size());
  for (const Positive& p : positives) {
    const auto it = index.find({p.user, p.day});
    if (it == index.end()) {
      throw ProtocolError(fmt::format("positive ({}, {}) on day {}: user has no ranked list",
                                      p.user, p.candidate, p.day));
    }
    const auto& items = lists[it->second].items;
    const auto pos = std::find_if(items.begin(), items.end(), [&](const ScoredCandidate& c) {
      return c.candidate == p.candidate;
    });
    if (pos == items.end()) {
      throw ProtocolError(fmt::format("positive ({}, {}) on day {}: not among the candidates",
                                      p.user, p.candidate, p.day));
    }
    ranks[it->second].push_back(static_cast<std::size_t>(pos - items.begin()) + 1);
  }
  return ranks;
}

double HitAtK(const std::vector<std::vector<std::size_t>>& ranks, std::size_t k) {
  double hits = 0.0, total = 0.0;
  for (const auto& list : ranks) {
    for (std::size_t r : list) {
      hits += r <= k ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  return total > 0 ? hits / total : 0.0;
}

double HitAtK(std::span<const RankedSuggestions> lists, std::span<const Positive> positives,
              std::size_t k) {
  return HitAtK(PositiveRanks(lists, positives), k);
}

double NdcgAtK(const std::vector<std::vector<std::size_t>>& ranks, std::size_t k) {
  double sum = 0.0, lists = 0.0;
  for (const auto& list : ranks) {
    if (list.empty()) continue;
    double dcg = 0.0, ideal = 0.0;
    for (std::size_t r : list) {
      if (r <= k) dcg += Discount(r);
    }
    for (std::size_t r = 1; r <= std::min(list.size(), k); ++r) ideal += Discount(r);
    sum += dcg / ideal;
    lists += 1.0;
  }
  return lists > 0 ? sum / lists : 0.0;
}

double NdcgAtK(std::span<const RankedSuggestions> lists, std::span<const Positive> positives,
               std::size_t k) {
  return NdcgAtK(PositiveRanks(lists, positives), k);
}

double Auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw ContractError(fmt::format("auc: {} scores vs {} labels", scores.size(), labels.size()));
  }
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] > 0.5) {
        pos += 1.0;
        rank_sum += mid_rank;
      } else {
        neg += 1.0;
      }
    }
    i = j;
  }
  if (pos == 0.0 || neg == 0.0) {
    throw ContractError("auc: needs at least one positive and one negative label");
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

EvalReport Evaluate(const PairScorer& scorer, const Dataset& dataset, Split split,
                    const std::vector<std::size_t>& ks) {
  // Candidate lists and labels in a fixed (user, day) order.
  std::map<ListKey, std::vector<std::pair<std::uint32_t, std::uint8_t>>> groups;
  if (split == Split::kTest) {
    const std::uint32_t day = dataset.test_day();
    for (const Exposure& e : dataset.exposures()) {
      if (e.day != day) continue;
      auto& g = groups[{e.source, e.day}];
      for (std::size_t k = 0; k < e.candidates.size(); ++k) {
        g.push_back({e.candidates[k], e.clicked[k]});
      }
    }
  } else {
    for (const Sample& s : dataset.samples()) {
      if (s.split == split) groups[{s.source, s.day}].push_back({s.target, s.label});
    }
  }
  if (groups.empty()) {
    throw ContractError(std::string("evaluate: no lists in split ") + SplitName(split));
  }

  std::vector<Sample> pairs;
  std::vector<double> labels;
  for (const auto& [key, items] : groups) {
    for (const auto& [cand, label] : items) {
      pairs.push_back({key.first, cand, key.second, label, split});
      labels.push_back(label);
    }
  }
  const std::vector<double> scores = scorer(pairs);
  if (scores.size() != pairs.size()) {
    throw ContractError(fmt::format("evaluate: scorer returned {} scores for {} pairs",
                                    scores.size(), pairs.size()));
  }

  std::vector<RankedSuggestions> lists;
  std::vector<Positive> positives;
  std::size_t offset = 0;
  for (const auto& [key, items] : groups) {
    std::vector<std::uint32_t> cands;
    for (const auto& [cand, label] : items) {
      cands.push_back(cand);
      if (label) positives.push_back({key.first, key.second, cand});
    }
    lists.push_back(RankCandidates(key.first, key.second, cands,
                                   std::span<const double>(scores).subspan(offset, cands.size())));
    offset += cands.size();
  }

  const auto ranks = PositiveRanks(lists, positives);
  EvalReport report;
  report.ks = ks;
  for (std::size_t k : ks) {
    report.hit.push_back(HitAtK(ranks, k));
    report.ndcg.push_back(NdcgAtK(ranks, k));
  }
  report.auc = Auc(scores, labels);
  report.lists = lists.size();
  report.positives = positives.size();
  report.pairs = pairs.size();
  return report;
}

EvalReport Evaluate(const Model& model, const Dataset& dataset, Split split,
                    const std::vector<std::size_t>& ks) {
  return Evaluate(ModelScorer(model, dataset), dataset, split, ks);
}

std::string RenderTable(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  if (rows.empty()) return {};
  const auto& ks = rows.front().second.ks;
  std::size_t name_width = 5;
  for (const auto& [name, r] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream out;
  out << fmt::format("{:<{}}", "model", name_width);
  for (std::size_t k : ks) out << fmt::format("  {:>8}", fmt::format("HIT@{}", k));
  for (std::size_t k : ks) out << fmt::format("  {:>8}", fmt::format("NDCG@{}", k));
  out << fmt::format("  {:>8}\n", "AUC");
  for (const auto& [name, r] : rows) {
    out << fmt::format("{:<{}}", name, name_width);
    for (double v : r.hit) out << fmt::format("  {:>8.4f}", v);
    for (double v : r.ndcg) out << fmt::format("  {:>8.4f}", v);
    out << fmt::format("  {:>8.4f}\n", r.auc);
  }
  return out.str();
}

std::string RenderKeyValue(const EvalReport& report) {
  std::ostringstream out;
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << fmt::format("hit@{} = {:.6f}\n", report.ks[i], report.hit[i]);
  }
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << fmt::format("ndcg@{} = {:.6f}\n", report.ks[i], report.ndcg[i]);
  }
  out << fmt::format("auc = {:.6f}\n", report.auc);
  out << fmt::format("lists = {}\npositives = {}\npairs = {}\n", report.lists, report.positives,
                     report.pairs);
  return out.str();
}

}  // namespace dsen
