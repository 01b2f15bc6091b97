#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dsen/data.h"
#include "dsen/evaluation.h"
#include "dsen/model.h"
#include "dsen/training.h"

namespace dsen {

struct RetrievalConfig {
  std::size_t retrieve = 1000;  // N
  std::size_t suggest = 100;    // n
  // Channel weights: profile cosine, same level bucket, random exploration.
  double cosine_weight = 0.5;
  double level_weight = 0.3;
  double random_weight = 0.2;
  std::uint64_t seed = 1;

  void Validate() const;
};

// The `count` members of `population` with the highest cosine between their
// profile row and the user's (rows of `profiles`); ties by ascending id.
std::vector<std::uint32_t> TopCosine(const Tensor& profiles, std::uint32_t user,
                                     std::span<const std::uint32_t> population,
                                     std::size_t count);

// Users the source already requested before `day`.
std::set<std::uint32_t> ExistingFriends(const Dataset& dataset, std::uint32_t user,
                                        std::uint32_t day);

// Channel union in cosine, level, random order; deduplicated, topped up from
// the random stream and truncated to N. The user and `exclude` are never
// returned.
std::vector<std::uint32_t> RetrieveCandidates(const Dataset& dataset, std::uint32_t user,
                                              std::uint32_t day, const RetrievalConfig& config,
                                              const std::set<std::uint32_t>& exclude);

// Retrieval, model scoring, ranking, top n. Served on `day` (the test day
// in the CLI).
RankedSuggestions Suggest(const Model& model, const Dataset& dataset, std::uint32_t user,
                          std::uint32_t day, const RetrievalConfig& config);

// Settings read from a flat config (file values already merged with flags).
// Each throws ValidationError naming the offending key.
FeatureSchema SchemaFrom(const ConfigFile& cfg);
GeneratorConfig GeneratorConfigFrom(const ConfigFile& cfg);
TrainConfig TrainConfigFrom(const ConfigFile& cfg);
ModelDims ModelDimsFrom(const ConfigFile& cfg, const FeatureSchema& schema, bool desk_scale);
RetrievalConfig RetrievalConfigFrom(const ConfigFile& cfg);

// Keys each reader understands.
const std::set<std::string>& SchemaKeys();
const std::set<std::string>& GeneratorKeys();
const std::set<std::string>& TrainKeys();
const std::set<std::string>& ModelKeys();
const std::set<std::string>& RetrievalKeys();

// "user_id, rank, candidate_id, score" lines.
std::string FormatSuggestions(std::span<const RankedSuggestions> lists);

}  // namespace dsen
