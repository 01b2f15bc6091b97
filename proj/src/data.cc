#include "dsen/data.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "dsen/rng.h"

namespace dsen {
namespace {

// Stream tags for DeriveSeed.
enum : std::uint64_t {
  kMixStream = 1,
  kUserStream,
  kProfileNoiseStream,
  kDailyNoiseStream,
  kActiveStream,
  kExposureStream,
  kClickStream,
  kNegativeStream,
  kSplitStream,
  kLinkStream,
};

constexpr double kStyleDecay = 0.85;
constexpr double kStyleShock = 0.5;
constexpr std::size_t kStyleLags = 3;
constexpr double kLevelBucketWidth = 2.0;
constexpr std::size_t kCoreLinkFeatures = 8;

double Sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void FinishMoments(std::vector<double>& mean, std::vector<double>& var, double count) {
  for (std::size_t c = 0; c < mean.size(); ++c) {
    const double sd = count > 0 ? std::sqrt(var[c] / count) : 0.0;
    var[c] = sd < 1e-12 ? 1.0 : sd;
  }
}

// Two-pass column moments over rows supplied by `visit(f)`, which calls f on
// each row.
template <class Visit>
void ColumnMoments(std::size_t width, Visit&& visit, std::vector<double>& mean,
                   std::vector<double>& std) {
  mean.assign(width, 0.0);
  std::vector<double> var(width, 0.0);
  double count = 0.0;
  visit([&](std::span<const double> row) {
    for (std::size_t c = 0; c < width; ++c) mean[c] += row[c];
    count += 1.0;
  });
  if (count > 0) {
    for (double& m : mean) m /= count;
  }
  visit([&](std::span<const double> row) {
    for (std::size_t c = 0; c < width; ++c) {
      const double d = row[c] - mean[c];
      var[c] += d * d;
    }
  });
  FinishMoments(mean, var, count);
  std = std::move(var);
}

}  // namespace

FeatureSchema FeatureSchema::Default() {
  FeatureSchema s;
  s.profile_groups = {{"registration", 13},
                      {"game_mode", 14},
                      {"activation_summary", 28},
                      {"consumption_summary", 13}};
  s.sequence_groups = {{"score_award", 10},
                       {"equipment", 4},
                       {"tactical_skills", 37},
                       {"team_statistics", 4}};
  return s;
}

void FeatureSchema::Validate() const {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ValidationError(key, "must be >= 1");
  };
  positive(seq_features, "seq_features");
  positive(profile_features, "profile_features");
  positive(window, "window");
  positive(link_features, "link_features");
  auto sum = [](const std::vector<FeatureGroup>& g) {
    std::size_t n = 0;
    for (const auto& x : g) n += x.size;
    return n;
  };
  if (!profile_groups.empty() && sum(profile_groups) != profile_features) {
    throw ValidationError("profile_features", "feature groups sum to " +
                                                  std::to_string(sum(profile_groups)));
  }
  if (!sequence_groups.empty() && sum(sequence_groups) != seq_features) {
    throw ValidationError("seq_features", "feature groups sum to " +
                                              std::to_string(sum(sequence_groups)));
  }
}

void GeneratorConfig::Validate(const FeatureSchema& schema) const {
  if (users < 10) throw ValidationError("users", "must be >= 10");
  if (days <= schema.window) {
    throw ValidationError("days", "must exceed the window (" + std::to_string(schema.window) + ")");
  }
  if (active_per_day == 0 || active_per_day > users) {
    throw ValidationError("active_per_day", "must be in [1, users]");
  }
  if (exposures_per_user == 0 || exposures_per_user >= users) {
    throw ValidationError("exposures_per_user", "must be in [1, users - 1]");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("noise", "must be >= 0");
  if (!(base_rate > 0.0 && base_rate < 1.0)) throw ValidationError("base_rate", "must be in (0, 1)");
  for (auto [v, key] : {std::pair{taste_weight, "taste_weight"},
                        std::pair{style_weight, "style_weight"},
                        std::pair{level_weight, "level_weight"}}) {
    if (!std::isfinite(v)) throw ValidationError(key, "must be finite");
  }
  if (negative_ratio == 0) throw ValidationError("negative_ratio", "must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction", "must be in (0, 1)");
  }
}

const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Normalization Normalization::Identity(const FeatureSchema& schema) {
  Normalization n;
  n.seq_mean.assign(schema.seq_features, 0.0);
  n.seq_std.assign(schema.seq_features, 1.0);
  n.profile_mean.assign(schema.profile_features, 0.0);
  n.profile_std.assign(schema.profile_features, 1.0);
  n.link_mean.assign(schema.link_features, 0.0);
  n.link_std.assign(schema.link_features, 1.0);
  return n;
}

Dataset::Dataset(FeatureSchema schema, GeneratorConfig config)
    : schema_(std::move(schema)),
      config_(config),
      norm_(Normalization::Identity(schema_)) {}

std::span<const double> Dataset::Taste(std::uint32_t user) const {
  return {taste_.data() + user * kTasteDim, kTasteDim};
}

std::span<const double> Dataset::Style(std::uint32_t user, std::uint32_t day) const {
  return {style_.data() + (user * days() + day) * kStyleDim, kStyleDim};
}

double Dataset::Level(std::uint32_t user, std::uint32_t day) const {
  return level_[user * days() + day];
}

double Dataset::Activity(std::uint32_t user, std::uint32_t day) const {
  return activity_[user * days() + day];
}

std::size_t Dataset::LevelBucket(std::uint32_t user, std::uint32_t day) const {
  return static_cast<std::size_t>(std::max(0.0, Level(user, day)) / kLevelBucketWidth);
}

double Dataset::PlantedLogit(std::uint32_t i, std::uint32_t j, std::uint32_t day) const {
  const std::uint32_t prev = day > 0 ? day - 1 : 0;
  double logit = planted_bias_ + config_.taste_weight * Dot(Taste(i), Taste(j));
  double weight = 1.0;
  for (std::size_t lag = 1; lag <= kStyleLags && lag <= day; ++lag) {
    weight *= 0.5;
    logit += config_.style_weight * weight * Dot(Style(i, day - lag), Style(j, day - lag));
  }
  logit -= config_.level_weight * std::abs(Level(i, prev) - Level(j, prev));
  return logit;
}

std::span<const double> Dataset::RawDaily(std::uint32_t user, std::uint32_t day) const {
  return {raw_daily_.data() + (user * days() + day) * schema_.seq_features, schema_.seq_features};
}

std::span<const double> Dataset::RawProfile(std::uint32_t user) const {
  return {raw_profile_.data() + user * schema_.profile_features, schema_.profile_features};
}

std::vector<double> Dataset::RawLink(std::uint32_t i, std::uint32_t j, std::uint32_t day) const {
  const std::uint32_t prev = day > 0 ? day - 1 : 0;
  std::mt19937_64 rng = StreamRng(config_.seed, {kLinkStream, i, j, day});
  std::normal_distribution<double> normal;
  const double gap = std::abs(Level(i, prev) - Level(j, prev));
  const auto pi = RawProfile(i), pj = RawProfile(j);
  const double denom = std::sqrt(Dot(pi, pi) * Dot(pj, pj));
  const double cosine = denom > 0 ? Dot(pi, pj) / denom : 0.0;
  const double cos_bucket = cosine < -0.15 ? -1.0 : (cosine > 0.15 ? 1.0 : 0.0);

  std::vector<double> out(std::max(schema_.link_features, kCoreLinkFeatures));
  out[0] = gap + 0.3 * normal(rng);
  out[1] = cos_bucket;
  out[2] = std::poisson_distribution<int>(3.0 * std::exp(-gap / 2.0))(rng);
  out[3] = LevelBucket(i, prev) == LevelBucket(j, prev) ? 1.0 : 0.0;
  out[4] = std::bernoulli_distribution(0.15)(rng) ? 1.0 : 0.0;
  out[5] = std::poisson_distribution<int>(cos_bucket > 0 ? 1.0 : 0.5)(rng);
  for (std::size_t c = 6; c < out.size(); ++c) out[c] = normal(rng);
  out.resize(schema_.link_features);
  return out;
}

void Dataset::FillSequence(std::uint32_t user, std::uint32_t day, std::vector<Tensor>& steps,
                           std::size_t row) const {
  const std::size_t t = schema_.window, d = schema_.seq_features;
  for (std::size_t s = 0; s < t; ++s) {
    double* out = steps[s].mutable_data().data() + row * d;
    // step s holds day - t + s
    if (day + s < t) {
      std::fill(out, out + d, 0.0);
      continue;
    }
    const auto raw = RawDaily(user, static_cast<std::uint32_t>(day + s - t));
    for (std::size_t c = 0; c < d; ++c) out[c] = Normalize(raw[c], norm_.seq_mean[c], norm_.seq_std[c]);
  }
}

Tensor Dataset::Sequence(std::uint32_t user, std::uint32_t day) const {
  std::vector<Tensor> steps(schema_.window, Tensor({1, schema_.seq_features}));
  FillSequence(user, day, steps, 0);
  return StackRows(steps);
}

Tensor Dataset::Profile(std::uint32_t user) const {
  const auto raw = RawProfile(user);
  Tensor out({schema_.profile_features});
  for (std::size_t c = 0; c < raw.size(); ++c) {
    out.mutable_data()[c] = Normalize(raw[c], norm_.profile_mean[c], norm_.profile_std[c]);
  }
  return out;
}

Tensor Dataset::Link(std::uint32_t i, std::uint32_t j, std::uint32_t day) const {
  const std::vector<double> raw = RawLink(i, j, day);
  Tensor out({schema_.link_features});
  for (std::size_t c = 0; c < raw.size(); ++c) {
    out.mutable_data()[c] = Normalize(raw[c], norm_.link_mean[c], norm_.link_std[c]);
  }
  return out;
}

PairFeatures Dataset::Features(std::uint32_t source, std::uint32_t target,
                               std::uint32_t day) const {
  return {Sequence(source, day), Profile(source), Sequence(target, day), Profile(target),
          Link(source, target, day)};
}

PairBatch Dataset::Batch(std::span<const Sample> samples) const {
  const std::size_t n = samples.size();
  const std::size_t dp = schema_.profile_features, dl = schema_.link_features;
  PairBatch b;
  b.size = n;
  b.source_steps.assign(schema_.window, Tensor({n, schema_.seq_features}));
  b.target_steps.assign(schema_.window, Tensor({n, schema_.seq_features}));
  b.source_profile = Tensor({n, dp});
  b.target_profile = Tensor({n, dp});
  b.link = Tensor({n, dl});
  b.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const Sample& s = samples[r];
    FillSequence(s.source, s.day, b.source_steps, r);
    FillSequence(s.target, s.day, b.target_steps, r);
    const Tensor ps = Profile(s.source), pt = Profile(s.target), l = Link(s.source, s.target, s.day);
    std::copy_n(ps.data().begin(), dp, b.source_profile.mutable_data().begin() + r * dp);
    std::copy_n(pt.data().begin(), dp, b.target_profile.mutable_data().begin() + r * dp);
    std::copy_n(l.data().begin(), dl, b.link.mutable_data().begin() + r * dl);
    b.labels[r] = s.label;
  }
  return b;
}

PairBatch Dataset::Batch(std::uint32_t source, std::span<const std::uint32_t> targets,
                         std::uint32_t day) const {
  std::vector<Sample> samples;
  samples.reserve(targets.size());
  for (std::uint32_t t : targets) samples.push_back({source, t, day, 0, Split::kTest});
  PairBatch b = Batch(samples);
  b.labels.clear();
  return b;
}

std::vector<Sample> Dataset::SamplesIn(Split split) const {
  std::vector<Sample> out;
  for (const Sample& s : samples_) {
    if (s.split == split) out.push_back(s);
  }
  return out;
}

std::uint32_t Dataset::test_day() const {
  std::uint32_t day = 0;
  bool found = false;
  for (const Sample& s : samples_) {
    if (s.split == Split::kTest) {
      day = std::max(day, s.day);
      found = true;
    }
  }
  if (!found) {
    for (const Exposure& e : exposures_) day = std::max(day, e.day);
  }
  return day;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.schema_ == b.schema_ && a.config_ == b.config_ &&
         a.planted_bias_ == b.planted_bias_ && a.daily_mixing_ == b.daily_mixing_ &&
         a.profile_mixing_ == b.profile_mixing_ && a.taste_ == b.taste_ &&
         a.extras_ == b.extras_ && a.level_ == b.level_ && a.style_ == b.style_ &&
         a.activity_ == b.activity_ && a.exposures_ == b.exposures_ &&
         a.samples_ == b.samples_ && a.norm_ == b.norm_;
}

void Dataset::Materialize() {
  const std::size_t u_count = users(), d_count = days();
  const std::size_t ds = schema_.seq_features, dp = schema_.profile_features;
  raw_profile_.assign(u_count * dp, 0.0);
  raw_daily_.assign(u_count * d_count * ds, 0.0);
  std::normal_distribution<double> normal;
  for (std::uint32_t u = 0; u < u_count; ++u) {
    std::mt19937_64 prng = StreamRng(config_.seed, {kProfileNoiseStream, u});
    double latent[kProfileLatents];
    std::copy_n(taste_.begin() + u * kTasteDim, kTasteDim, latent);
    std::copy_n(extras_.begin() + u * kProfileExtras, kProfileExtras, latent + kTasteDim);
    for (std::size_t c = 0; c < dp; ++c) {
      double v = 0.0;
      for (std::size_t k = 0; k < kProfileLatents; ++k) v += profile_mixing_.at(c, k) * latent[k];
      raw_profile_[u * dp + c] = v + config_.noise * normal(prng);
    }
    std::mt19937_64 drng = StreamRng(config_.seed, {kDailyNoiseStream, u});
    for (std::uint32_t d = 0; d < d_count; ++d) {
      double x[kDailyLatents];
      const auto style = Style(u, d);
      std::copy(style.begin(), style.end(), x);
      x[kStyleDim] = (Level(u, d) - 6.0) / 3.0;
      x[kStyleDim + 1] = Activity(u, d);
      double* row = raw_daily_.data() + (u * d_count + d) * ds;
      for (std::size_t c = 0; c < ds; ++c) {
        double v = 0.0;
        for (std::size_t k = 0; k < kDailyLatents; ++k) v += daily_mixing_.at(c, k) * x[k];
        row[c] = v + config_.noise * normal(drng);
      }
    }
  }
}

Dataset GenerateSynthetic(const FeatureSchema& schema, const GeneratorConfig& config) {
  schema.Validate();
  config.Validate(schema);
  Dataset ds(schema, config);
  const std::size_t u_count = config.users, d_count = config.days;
  std::normal_distribution<double> normal;

  {
    std::mt19937_64 rng = StreamRng(config.seed, {kMixStream});
    ds.daily_mixing_ = Tensor({schema.seq_features, kDailyLatents});
    for (double& v : ds.daily_mixing_.mutable_data()) v = normal(rng) / std::sqrt(double(kDailyLatents));
    ds.profile_mixing_ = Tensor({schema.profile_features, kProfileLatents});
    for (double& v : ds.profile_mixing_.mutable_data()) v = normal(rng) / std::sqrt(double(kProfileLatents));
  }

  ds.taste_.resize(u_count * kTasteDim);
  ds.extras_.resize(u_count * kProfileExtras);
  ds.level_.resize(u_count * d_count);
  ds.style_.resize(u_count * d_count * kStyleDim);
  ds.activity_.resize(u_count * d_count);
  const double style_sd = kStyleShock / std::sqrt(1.0 - kStyleDecay * kStyleDecay);
  for (std::uint32_t u = 0; u < u_count; ++u) {
    std::mt19937_64 rng = StreamRng(config.seed, {kUserStream, u});
    for (std::size_t k = 0; k < kTasteDim; ++k) ds.taste_[u * kTasteDim + k] = normal(rng);
    for (std::size_t k = 0; k < kProfileExtras; ++k) ds.extras_[u * kProfileExtras + k] = normal(rng);
    double level = std::uniform_real_distribution<double>(1.0, 8.0)(rng);
    const double growth = std::uniform_real_distribution<double>(0.02, 0.2)(rng);
    double style[kStyleDim];
    for (double& s : style) s = style_sd * normal(rng);
    for (std::uint32_t d = 0; d < d_count; ++d) {
      if (d > 0) {
        level += growth + 0.05 * std::abs(normal(rng));
        for (double& s : style) s = kStyleDecay * s + kStyleShock * normal(rng);
      }
      ds.level_[u * d_count + d] = level;
      std::copy_n(style, kStyleDim, ds.style_.begin() + (u * d_count + d) * kStyleDim);
      ds.activity_[u * d_count + d] = normal(rng);
    }
  }
  ds.Materialize();

  // Exposure lists on every labeled day: half from the source's level
  // bucket, the rest uniform.
  std::vector<std::uint32_t> everyone(u_count);
  std::iota(everyone.begin(), everyone.end(), 0u);
  for (std::uint32_t day = static_cast<std::uint32_t>(schema.window); day < d_count; ++day) {
    std::mt19937_64 arng = StreamRng(config.seed, {kActiveStream, day});
    std::vector<std::uint32_t> pool = everyone;
    for (std::size_t k = 0; k < config.active_per_day; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(arng)]);
    }
    std::vector<std::uint32_t> active(pool.begin(), pool.begin() + config.active_per_day);
    std::sort(active.begin(), active.end());

    std::vector<std::vector<std::uint32_t>> buckets;
    for (std::uint32_t u = 0; u < u_count; ++u) {
      const std::size_t b = ds.LevelBucket(u, day - 1);
      if (b >= buckets.size()) buckets.resize(b + 1);
      buckets[b].push_back(u);
    }
    for (std::uint32_t source : active) {
      std::mt19937_64 rng = StreamRng(config.seed, {kExposureStream, source, day});
      std::uniform_int_distribution<std::uint32_t> any(0, static_cast<std::uint32_t>(u_count - 1));
      Exposure e{source, day, {}, {}};
      std::unordered_set<std::uint32_t> seen{source};
      const auto& bucket = buckets[ds.LevelBucket(source, day - 1)];
      const std::size_t want = config.exposures_per_user;
      for (std::size_t tries = 0; e.candidates.size() < want / 2 && tries < 4 * want; ++tries) {
        const std::uint32_t c =
            bucket[std::uniform_int_distribution<std::size_t>(0, bucket.size() - 1)(rng)];
        if (seen.insert(c).second) e.candidates.push_back(c);
      }
      while (e.candidates.size() < want) {
        const std::uint32_t c = any(rng);
        if (seen.insert(c).second) e.candidates.push_back(c);
      }
      ds.exposures_.push_back(std::move(e));
    }
  }

  // Bias so that the mean request probability over all exposures equals the
  // configured base rate.
  std::vector<double> logits;
  for (const Exposure& e : ds.exposures_) {
    for (std::uint32_t c : e.candidates) logits.push_back(ds.PlantedLogit(e.source, c, e.day));
  }
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double l : logits) mean += Sigmoid(l + mid);
    mean /= static_cast<double>(logits.size());
    (mean < config.base_rate ? lo : hi) = mid;
  }
  ds.planted_bias_ = 0.5 * (lo + hi);

  for (Exposure& e : ds.exposures_) {
    std::mt19937_64 rng = StreamRng(config.seed, {kClickStream, e.source, e.day});
    std::uniform_real_distribution<double> unif;
    e.clicked.resize(e.candidates.size());
    for (std::size_t k = 0; k < e.candidates.size(); ++k) {
      e.clicked[k] = unif(rng) < Sigmoid(ds.PlantedLogit(e.source, e.candidates[k], e.day));
    }
  }

  ds.samples_ = BuildSamples(ds.exposures_, config.negative_ratio, config.seed);
  TemporalSplit(ds, config.train_fraction, config.seed);
  return ds;
}

std::vector<std::uint32_t> SampleNegatives(const Exposure& exposure, std::size_t ratio,
                                           std::uint64_t seed) {
  std::vector<std::uint32_t> pool;
  std::size_t positives = 0;
  for (std::size_t k = 0; k < exposure.candidates.size(); ++k) {
    if (exposure.clicked[k]) {
      ++positives;
    } else {
      pool.push_back(exposure.candidates[k]);
    }
  }
  const std::size_t want = ratio * positives;
  if (want < pool.size()) {
    std::mt19937_64 rng = StreamRng(seed, {kNegativeStream, exposure.source, exposure.day});
    for (std::size_t k = 0; k < want; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    pool.resize(want);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Sample> BuildSamples(std::span<const Exposure> exposures, std::size_t ratio,
                                 std::uint64_t seed) {
  std::vector<Sample> out;
  for (const Exposure& e : exposures) {
    if (e.clicked.size() != e.candidates.size()) {
      throw ContractError("exposure of user " + std::to_string(e.source) + " on day " +
                          std::to_string(e.day) + " has unlabeled candidates");
    }
    for (std::size_t k = 0; k < e.candidates.size(); ++k) {
      if (e.clicked[k]) out.push_back({e.source, e.candidates[k], e.day, 1, Split::kTrain});
    }
    for (std::uint32_t neg : SampleNegatives(e, ratio, seed)) {
      out.push_back({e.source, neg, e.day, 0, Split::kTrain});
    }
  }
  return out;
}

void TemporalSplit(Dataset& dataset, double train_fraction, std::uint64_t seed) {
  auto& samples = dataset.samples();
  std::vector<std::uint32_t> days;
  for (const Sample& s : samples) days.push_back(s.day);
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  if (days.size() < 2) {
    throw ContractError("temporal split needs at least 2 distinct days, got " +
                        std::to_string(days.size()));
  }
  const std::uint32_t last = days.back();
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].day == last) {
      samples[i].split = Split::kTest;
    } else {
      rest.push_back(i);
    }
  }
  std::mt19937_64 rng = StreamRng(seed, {kSplitStream});
  std::shuffle(rest.begin(), rest.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * rest.size()));
  for (std::size_t k = 0; k < rest.size(); ++k) {
    samples[rest[k]].split = k < n_train ? Split::kTrain : Split::kVal;
  }
  dataset.set_normalization(FitNormalization(dataset));
}

Normalization FitNormalization(const Dataset& dataset) {
  const FeatureSchema& schema = dataset.schema();
  const std::vector<Sample> train = dataset.SamplesIn(Split::kTrain);
  Normalization n;
  n.fitted = true;
  ColumnMoments(
      schema.seq_features,
      [&](auto&& f) {
        for (const Sample& s : train) {
          for (std::uint32_t user : {s.source, s.target}) {
            const std::uint32_t first = s.day >= schema.window ? s.day - schema.window : 0;
            for (std::uint32_t d = first; d < s.day; ++d) f(dataset.RawDaily(user, d));
          }
        }
      },
      n.seq_mean, n.seq_std);
  ColumnMoments(
      schema.profile_features,
      [&](auto&& f) {
        for (const Sample& s : train) {
          f(dataset.RawProfile(s.source));
          f(dataset.RawProfile(s.target));
        }
      },
      n.profile_mean, n.profile_std);
  std::vector<double> links;
  links.reserve(train.size() * schema.link_features);
  for (const Sample& s : train) {
    const auto l = dataset.RawLink(s.source, s.target, s.day);
    links.insert(links.end(), l.begin(), l.end());
  }
  ColumnMoments(
      schema.link_features,
      [&](auto&& f) {
        for (std::size_t r = 0; r < train.size(); ++r) {
          f(std::span<const double>(links.data() + r * schema.link_features, schema.link_features));
        }
      },
      n.link_mean, n.link_std);
  return n;
}

}  // namespace dsen
