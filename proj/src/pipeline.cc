#include "dsen/pipeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "dsen/rng.h"

namespace dsen {
namespace {

enum : std::uint64_t { kLevelChannel = 11, kRandomChannel = 12 };

}  // namespace

void RetrievalConfig::Validate() const {
  if (retrieve == 0) throw ValidationError("retrieve", "must be >= 1");
  if (suggest == 0) throw ValidationError("suggest", "must be >= 1");
  if (suggest > retrieve) throw ValidationError("suggest", "must not exceed retrieve");
  for (auto [w, key] : {std::pair{cosine_weight, "retrieval_cosine_weight"},
                        std::pair{level_weight, "retrieval_level_weight"},
                        std::pair{random_weight, "retrieval_random_weight"}}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError(key, "must be >= 0");
  }
  if (cosine_weight + level_weight + random_weight <= 0.0) {
    throw ValidationError("retrieval_random_weight", "channel weights sum to zero");
  }
}

std::vector<std::uint32_t> TopCosine(const Tensor& profiles, std::uint32_t user,
                                     std::span<const std::uint32_t> population,
                                     std::size_t count) {
  const std::size_t d = profiles.cols();
  auto row = [&](std::uint32_t u) { return profiles.data().subspan(u * d, d); };
  auto norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const auto q = row(user);
  const double qn = norm(q);
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(population.size());
  for (std::uint32_t c : population) {
    const auto r = row(c);
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += q[k] * r[k];
    const double denom = qn * norm(r);
    scored.push_back({denom > 0.0 ? dot / denom : 0.0, c});
  }
  count = std::min(count, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + count, scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(scored[i].second);
  return out;
}

std::set<std::uint32_t> ExistingFriends(const Dataset& dataset, std::uint32_t user,
                                        std::uint32_t day) {
  std::set<std::uint32_t> out;
  for (const Exposure& e : dataset.exposures()) {
    if (e.source != user || e.day >= day) continue;
    for (std::size_t k = 0; k < e.candidates.size(); ++k) {
      if (e.clicked[k]) out.insert(e.candidates[k]);
    }
  }
  return out;
}

std::vector<std::uint32_t> RetrieveCandidates(const Dataset& dataset, std::uint32_t user,
                                              std::uint32_t day, const RetrievalConfig& config,
                                              const std::set<std::uint32_t>& exclude) {
  config.Validate();
  if (user >= dataset.users()) {
    throw ContractError(fmt::format("retrieve: user {} not in the population of {}", user,
                                    dataset.users()));
  }
  std::vector<std::uint32_t> population;
  for (std::uint32_t u = 0; u < dataset.users(); ++u) {
    if (u != user && !exclude.count(u)) population.push_back(u);
  }
  if (population.empty()) {
    throw ContractError(fmt::format("retrieve: empty population for user {}", user));
  }
  const std::size_t n = std::min(config.retrieve, population.size());
  const double total = config.cosine_weight + config.level_weight + config.random_weight;
  const auto quota = [&](double w) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * w / total));
  };

  std::vector<std::uint32_t> out;
  std::unordered_set<std::uint32_t> taken;
  auto add = [&](std::span<const std::uint32_t> ids, std::size_t limit) {
    std::size_t added = 0;
    for (std::uint32_t id : ids) {
      if (added == limit || out.size() == n) break;
      if (taken.insert(id).second) {
        out.push_back(id);
        ++added;
      }
    }
  };

  // (a) profile cosine over normalized profiles.
  if (config.cosine_weight > 0.0) {
    Tensor profiles({dataset.users(), dataset.schema().profile_features});
    for (std::uint32_t u = 0; u < dataset.users(); ++u) {
      const Tensor p = dataset.Profile(u);
      std::copy(p.data().begin(), p.data().end(),
                profiles.mutable_data().begin() + u * profiles.cols());
    }
    add(TopCosine(profiles, user, population, quota(config.cosine_weight)),
        quota(config.cosine_weight));
  }

  // (b) same level bucket as of the previous day.
  const std::uint32_t prev = day > 0 ? day - 1 : 0;
  if (config.level_weight > 0.0) {
    std::vector<std::uint32_t> bucket;
    const std::size_t own = dataset.LevelBucket(user, prev);
    for (std::uint32_t u : population) {
      if (dataset.LevelBucket(u, prev) == own) bucket.push_back(u);
    }
    std::mt19937_64 rng = StreamRng(config.seed, {kLevelChannel, user, day});
    std::shuffle(bucket.begin(), bucket.end(), rng);
    add(bucket, quota(config.level_weight));
  }

  // (c) random exploration; also tops up whatever the other channels left.
  std::vector<std::uint32_t> shuffled = population;
  std::mt19937_64 rng = StreamRng(config.seed, {kRandomChannel, user, day});
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  add(shuffled, n);
  return out;
}

RankedSuggestions Suggest(const Model& model, const Dataset& dataset, std::uint32_t user,
                          std::uint32_t day, const RetrievalConfig& config) {
  const std::vector<std::uint32_t> candidates =
      RetrieveCandidates(dataset, user, day, config, ExistingFriends(dataset, user, day));
  RankedSuggestions ranked =
      RankCandidates(user, day, candidates, ModelScorer(model, dataset));
  if (ranked.items.size() > config.suggest) ranked.items.resize(config.suggest);
  return ranked;
}

std::string FormatSuggestions(std::span<const RankedSuggestions> lists) {
  std::string out;
  for (const RankedSuggestions& list : lists) {
    for (std::size_t r = 0; r < list.items.size(); ++r) {
      out += fmt::format("{}, {}, {}, {:.10f}\n", list.user, r + 1, list.items[r].candidate,
                         list.items[r].score);
    }
  }
  return out;
}

FeatureSchema SchemaFrom(const ConfigFile& cfg) {
  FeatureSchema s = FeatureSchema::Default();
  s.seq_features = cfg.GetSize("seq_features", s.seq_features);
  s.profile_features = cfg.GetSize("profile_features", s.profile_features);
  s.window = cfg.GetSize("window", s.window);
  s.link_features = cfg.GetSize("link_features", s.link_features);
  // Group labels only describe the default widths.
  if (s.seq_features != 55) s.sequence_groups.clear();
  if (s.profile_features != 68) s.profile_groups.clear();
  s.Validate();
  return s;
}

GeneratorConfig GeneratorConfigFrom(const ConfigFile& cfg) {
  GeneratorConfig c;
  c.users = cfg.GetSize("users", c.users);
  c.days = cfg.GetSize("days", c.days);
  c.active_per_day = cfg.GetSize("active_per_day", c.active_per_day);
  c.exposures_per_user = cfg.GetSize("exposures_per_user", c.exposures_per_user);
  c.noise = cfg.GetDouble("noise", c.noise);
  c.base_rate = cfg.GetDouble("base_rate", c.base_rate);
  c.taste_weight = cfg.GetDouble("taste_weight", c.taste_weight);
  c.style_weight = cfg.GetDouble("style_weight", c.style_weight);
  c.level_weight = cfg.GetDouble("level_weight", c.level_weight);
  c.negative_ratio = cfg.GetSize("negative_ratio", c.negative_ratio);
  c.train_fraction = cfg.GetDouble("train_fraction", c.train_fraction);
  c.seed = cfg.GetU64("seed", c.seed);
  return c;
}

TrainConfig TrainConfigFrom(const ConfigFile& cfg) {
  const bool paper = cfg.GetBool("paper_scale", false);
  TrainConfig c = paper ? TrainConfig::PaperScale() : TrainConfig{};
  c.batch_size = cfg.GetSize("batch_size", c.batch_size);
  c.learning_rate = cfg.GetDouble("learning_rate", c.learning_rate);
  c.max_epochs = cfg.GetSize("epochs", c.max_epochs);
  c.patience = cfg.GetSize("patience", c.patience);
  c.beta1 = cfg.GetDouble("beta1", c.beta1);
  c.beta2 = cfg.GetDouble("beta2", c.beta2);
  c.epsilon = cfg.GetDouble("epsilon", c.epsilon);
  c.seed = cfg.GetU64("seed", c.seed);
  c.Validate();
  return c;
}

ModelDims ModelDimsFrom(const ConfigFile& cfg, const FeatureSchema& schema, bool desk_scale) {
  ModelDims d = DimsFor(schema, desk_scale);
  d.gru_hidden = cfg.GetSize("gru_hidden", d.gru_hidden);
  d.gru_layers = cfg.GetSize("gru_layers", d.gru_layers);
  d.views = cfg.GetSize("views", d.views);
  d.evolution_hidden = cfg.GetSize("evolution_hidden", d.evolution_hidden);
  d.attention_heads = cfg.GetSize("attention_heads", d.attention_heads);
  d.mlp_hidden = cfg.GetSizeList("mlp_hidden", d.mlp_hidden);
  for (auto [v, key] : {std::pair{d.gru_hidden, "gru_hidden"}, std::pair{d.gru_layers, "gru_layers"},
                        std::pair{d.views, "views"},
                        std::pair{d.evolution_hidden, "evolution_hidden"},
                        std::pair{d.attention_heads, "attention_heads"}}) {
    if (v == 0) throw ValidationError(key, "must be >= 1");
  }
  for (std::size_t h : d.mlp_hidden) {
    if (h == 0) throw ValidationError("mlp_hidden", "widths must be >= 1");
  }
  return d;
}

RetrievalConfig RetrievalConfigFrom(const ConfigFile& cfg) {
  RetrievalConfig c;
  c.retrieve = cfg.GetSize("retrieve", c.retrieve);
  c.suggest = cfg.GetSize("suggest", c.suggest);
  c.cosine_weight = cfg.GetDouble("retrieval_cosine_weight", c.cosine_weight);
  c.level_weight = cfg.GetDouble("retrieval_level_weight", c.level_weight);
  c.random_weight = cfg.GetDouble("retrieval_random_weight", c.random_weight);
  c.seed = cfg.GetU64("seed", c.seed);
  c.Validate();
  return c;
}

const std::set<std::string>& SchemaKeys() {
  static const std::set<std::string> keys = {"seq_features", "profile_features", "window",
                                             "link_features"};
  return keys;
}

const std::set<std::string>& GeneratorKeys() {
  static const std::set<std::string> keys = {
      "users",        "days",         "active_per_day", "exposures_per_user",
      "noise",        "base_rate",    "taste_weight",   "style_weight",
      "level_weight", "negative_ratio", "train_fraction", "seed"};
  return keys;
}

const std::set<std::string>& TrainKeys() {
  static const std::set<std::string> keys = {"batch_size", "learning_rate", "epochs",
                                             "patience",   "beta1",         "beta2",
                                             "epsilon",    "seed",          "paper_scale"};
  return keys;
}

const std::set<std::string>& ModelKeys() {
  static const std::set<std::string> keys = {"gru_hidden",       "gru_layers",      "views",
                                             "evolution_hidden", "attention_heads", "mlp_hidden"};
  return keys;
}

const std::set<std::string>& RetrievalKeys() {
  static const std::set<std::string> keys = {"retrieve", "suggest", "retrieval_cosine_weight",
                                             "retrieval_level_weight",
                                             "retrieval_random_weight", "seed"};
  return keys;
}

}  // namespace dsen
