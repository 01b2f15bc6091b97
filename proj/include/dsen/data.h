#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsen/batch.h"
#include "dsen/config.h"

namespace dsen {

struct FeatureGroup {
  std::string name;
  std::size_t size = 0;
  friend bool operator==(const FeatureGroup&, const FeatureGroup&) = default;
};

struct FeatureSchema {
  std::size_t seq_features = 55;
  std::size_t profile_features = 68;
  std::size_t window = 15;
  std::size_t link_features = 8;
  std::vector<FeatureGroup> profile_groups;
  std::vector<FeatureGroup> sequence_groups;

  // 13+14+28+13 profile columns and 10+4+37+4 daily columns.
  static FeatureSchema Default();
  // Group lists must be empty or sum to the feature counts.
  void Validate() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

inline constexpr std::size_t kTasteDim = 4;
inline constexpr std::size_t kStyleDim = 4;
inline constexpr std::size_t kProfileExtras = 4;
// style, level, activity
inline constexpr std::size_t kDailyLatents = kStyleDim + 2;
inline constexpr std::size_t kProfileLatents = kTasteDim + kProfileExtras;

struct GeneratorConfig {
  std::size_t users = 10000;
  std::size_t days = 30;
  std::size_t active_per_day = 110;
  std::size_t exposures_per_user = 45;
  // Std of the feature corruption around the latent signal.
  double noise = 1.0;
  // Target fraction of exposures that get a request.
  double base_rate = 0.08;
  // Planted logit: taste·⟨τ_i,τ_j⟩ + style·Σ_δ 0.5^δ⟨s_i,s_j⟩(D-δ) − level·|ΔL|.
  double taste_weight = 1.0;
  double style_weight = 2.0;
  double level_weight = 0.5;
  std::size_t negative_ratio = 4;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;

  void Validate(const FeatureSchema& schema) const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };
const char* SplitName(Split s);

// Candidates shown to `source` on `day`; clicked[i] marks a friend request.
struct Exposure {
  std::uint32_t source = 0;
  std::uint32_t day = 0;
  std::vector<std::uint32_t> candidates;
  std::vector<std::uint8_t> clicked;
  friend bool operator==(const Exposure&, const Exposure&) = default;
};

struct Sample {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  std::uint32_t day = 0;
  std::uint8_t label = 0;
  Split split = Split::kTrain;
  friend bool operator==(const Sample&, const Sample&) = default;
};

// Column means and standard deviations (identity until fitted).
struct Normalization {
  std::vector<double> seq_mean, seq_std;
  std::vector<double> profile_mean, profile_std;
  std::vector<double> link_mean, link_std;
  bool fitted = false;

  static Normalization Identity(const FeatureSchema& schema);
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

// Synthetic users, their exposure logs and labeled pair samples. Daily and
// profile features are noisy linear views of per-user latents and are
// materialized from the stored latents and mixing matrices.
class Dataset {
 public:
  Dataset() = default;
  Dataset(FeatureSchema schema, GeneratorConfig config);

  const FeatureSchema& schema() const { return schema_; }
  const GeneratorConfig& config() const { return config_; }
  std::size_t users() const { return config_.users; }
  std::size_t days() const { return config_.days; }

  // Latents.
  std::span<const double> Taste(std::uint32_t user) const;
  std::span<const double> Style(std::uint32_t user, std::uint32_t day) const;
  double Level(std::uint32_t user, std::uint32_t day) const;
  double Activity(std::uint32_t user, std::uint32_t day) const;
  double planted_bias() const { return planted_bias_; }
  // Ground-truth logit of a request from i to j on `day`.
  double PlantedLogit(std::uint32_t i, std::uint32_t j, std::uint32_t day) const;
  std::size_t LevelBucket(std::uint32_t user, std::uint32_t day) const;

  // Unnormalized features.
  std::span<const double> RawDaily(std::uint32_t user, std::uint32_t day) const;
  std::span<const double> RawProfile(std::uint32_t user) const;
  std::vector<double> RawLink(std::uint32_t i, std::uint32_t j, std::uint32_t day) const;

  // Normalized features; the sequence covers days [day-window, day) with
  // zero rows on the left when the history is shorter.
  Tensor Sequence(std::uint32_t user, std::uint32_t day) const;
  Tensor Profile(std::uint32_t user) const;
  Tensor Link(std::uint32_t i, std::uint32_t j, std::uint32_t day) const;
  PairFeatures Features(std::uint32_t source, std::uint32_t target, std::uint32_t day) const;

  PairBatch Batch(std::span<const Sample> samples) const;
  // One source against many candidates; labels left empty.
  PairBatch Batch(std::uint32_t source, std::span<const std::uint32_t> targets,
                  std::uint32_t day) const;

  std::vector<Exposure>& exposures() { return exposures_; }
  const std::vector<Exposure>& exposures() const { return exposures_; }
  std::vector<Sample>& samples() { return samples_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::vector<Sample> SamplesIn(Split split) const;
  const Normalization& normalization() const { return norm_; }
  void set_normalization(Normalization n) { norm_ = std::move(n); }

  // Day index of the test split (last labeled day).
  std::uint32_t test_day() const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  friend Dataset GenerateSynthetic(const FeatureSchema&, const GeneratorConfig&);
  friend std::string SerializeDataset(const Dataset&);
  friend Dataset DeserializeDataset(std::string_view);

  void Materialize();
  double Normalize(double v, double mean, double std) const { return (v - mean) / std; }
  void FillSequence(std::uint32_t user, std::uint32_t day, std::vector<Tensor>& steps,
                    std::size_t row) const;

  FeatureSchema schema_;
  GeneratorConfig config_;
  double planted_bias_ = 0.0;
  Tensor daily_mixing_;    // seq_features × kDailyLatents
  Tensor profile_mixing_;  // profile_features × kProfileLatents
  std::vector<double> taste_;     // users × kTasteDim
  std::vector<double> extras_;    // users × kProfileExtras
  std::vector<double> level_;     // users × days
  std::vector<double> style_;     // users × days × kStyleDim
  std::vector<double> activity_;  // users × days
  std::vector<Exposure> exposures_;
  std::vector<Sample> samples_;
  Normalization norm_;

  // Derived, not serialized.
  std::vector<double> raw_daily_;    // (users·days) × seq_features
  std::vector<double> raw_profile_;  // users × profile_features
};

// Latents, exposures with planted labels, 1:ratio negatives, temporal split
// and train-fitted normalization.
Dataset GenerateSynthetic(const FeatureSchema& schema, const GeneratorConfig& config);

// Uniform draw of ratio × |positives| non-clicked candidates, or all of them
// when fewer exist. Returned in ascending id order.
std::vector<std::uint32_t> SampleNegatives(const Exposure& exposure, std::size_t ratio,
                                           std::uint64_t seed);

// Positive and sampled negative samples for every exposure (split unset).
std::vector<Sample> BuildSamples(std::span<const Exposure> exposures, std::size_t ratio,
                                 std::uint64_t seed);

// Last day → test; the rest shuffled into train/val; then normalization is
// fitted on train rows and stored in the dataset.
void TemporalSplit(Dataset& dataset, double train_fraction, std::uint64_t seed);

// Moments over every train feature row: both sides' sequence rows (padding
// excluded), both profiles, and the link row.
Normalization FitNormalization(const Dataset& dataset);

// Dataset file: "DSENDATA", u32 version, schema, generator config, mixing
// matrices, user table, exposure table, sample table, normalization.
inline constexpr std::uint32_t kDatasetVersion = 1;

std::string SerializeDataset(const Dataset& dataset);
Dataset DeserializeDataset(std::string_view bytes);
void SaveDataset(const Dataset& dataset, const std::string& path);
Dataset LoadDataset(const std::string& path);

// One sample per line with a header row.
void ExportSamplesCsv(const Dataset& dataset, const std::string& path);

}  // namespace dsen
