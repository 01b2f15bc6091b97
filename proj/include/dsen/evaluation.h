#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsen/data.h"
#include "dsen/model.h"

namespace dsen {

// A ground-truth positive that has no place in the ranked lists.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScoredCandidate {
  std::uint32_t candidate = 0;
  double score = 0.0;
  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

// Scores non-increasing; equal scores ordered by ascending candidate id.
struct RankedSuggestions {
  std::uint32_t user = 0;
  std::uint32_t day = 0;
  std::vector<ScoredCandidate> items;
};

struct Positive {
  std::uint32_t user = 0;
  std::uint32_t day = 0;
  std::uint32_t candidate = 0;
};

// Scores a batch of (source, target, day) pairs.
using PairScorer = std::function<std::vector<double>(std::span<const Sample>)>;

PairScorer ModelScorer(const Model& model, const Dataset& dataset,
                       std::size_t batch_size = 512);

RankedSuggestions RankCandidates(std::uint32_t user, std::uint32_t day,
                                 std::span<const std::uint32_t> candidates,
                                 std::span<const double> scores);
RankedSuggestions RankCandidates(std::uint32_t user, std::uint32_t day,
                                 std::span<const std::uint32_t> candidates,
                                 const PairScorer& scorer);

// 1-based ranks of each list's positives, one vector per list.
std::vector<std::vector<std::size_t>> PositiveRanks(std::span<const RankedSuggestions> lists,
                                                    std::span<const Positive> positives);

// Mean over positives of [rank <= k].
double HitAtK(std::span<const RankedSuggestions> lists, std::span<const Positive> positives,
              std::size_t k);
double HitAtK(const std::vector<std::vector<std::size_t>>& ranks, std::size_t k);

// Binary-gain NDCG@k with log2(rank + 1) discounts, averaged over lists that
// hold at least one positive.
double NdcgAtK(std::span<const RankedSuggestions> lists, std::span<const Positive> positives,
               std::size_t k);
double NdcgAtK(const std::vector<std::vector<std::size_t>>& ranks, std::size_t k);

// Rank-sum AUC; ties count one half.
double Auc(std::span<const double> scores, std::span<const double> labels);

inline const std::vector<std::size_t> kReportKs = {10, 20, 50, 100};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> hit;
  std::vector<double> ndcg;
  double auc = 0.0;
  std::size_t lists = 0;
  std::size_t positives = 0;
  std::size_t pairs = 0;
};

// Test split: every exposure list of the test day is ranked in full.
// Train/val: the split's samples grouped into lists by (source, day).
EvalReport Evaluate(const PairScorer& scorer, const Dataset& dataset, Split split,
                    const std::vector<std::size_t>& ks = kReportKs);
EvalReport Evaluate(const Model& model, const Dataset& dataset, Split split,
                    const std::vector<std::size_t>& ks = kReportKs);

// Rows are labeled reports; columns HIT@K then NDCG@K then AUC.
std::string RenderTable(const std::vector<std::pair<std::string, EvalReport>>& rows);
// `key = value` lines.
std::string RenderKeyValue(const EvalReport& report);

}  // namespace dsen
