#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "dsen/binary_io.h"
#include "dsen/data.h"

namespace dsen {
namespace {

GeneratorConfig SmallConfig(std::uint64_t seed = 3) {
  GeneratorConfig c;
  c.users = 400;
  c.days = 20;
  c.active_per_day = 40;
  c.exposures_per_user = 30;
  c.seed = seed;
  return c;
}

// Rank-sum AUC with average ranks for ties.
double RankSumAuc(std::vector<std::pair<double, int>> scored) {
  std::sort(scored.begin(), scored.end());
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double avg_rank = 0.5 * (double(i + 1) + double(j));
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second) {
        rank_sum += avg_rank;
        pos += 1;
      } else {
        neg += 1;
      }
    }
    i = j;
  }
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

class DataTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dataset_ = new Dataset(GenerateSynthetic(FeatureSchema::Default(), SmallConfig()));
  }
  static void TearDownTestSuite() { delete dataset_; }
  static const Dataset& ds() { return *dataset_; }

  static Dataset* dataset_;
};

Dataset* DataTest::dataset_ = nullptr;

TEST(FeatureSchemaTest, DefaultsMatchFeatureTables) {
  const FeatureSchema s = FeatureSchema::Default();
  EXPECT_EQ(s.seq_features, 55u);
  EXPECT_EQ(s.profile_features, 68u);
  EXPECT_EQ(s.window, 15u);
  EXPECT_EQ(s.link_features, 8u);
  std::vector<std::size_t> profile, sequence;
  for (const auto& g : s.profile_groups) profile.push_back(g.size);
  for (const auto& g : s.sequence_groups) sequence.push_back(g.size);
  EXPECT_EQ(profile, (std::vector<std::size_t>{13, 14, 28, 13}));
  EXPECT_EQ(sequence, (std::vector<std::size_t>{10, 4, 37, 4}));
  EXPECT_NO_THROW(s.Validate());
}

TEST(FeatureSchemaTest, GroupSumMismatchNamesKey) {
  FeatureSchema s = FeatureSchema::Default();
  s.profile_features = 70;
  try {
    s.Validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "profile_features");
  }
}

TEST(GeneratorConfigTest, InvalidSettingsNameTheirKey) {
  const FeatureSchema s = FeatureSchema::Default();
  auto key_of = [&](GeneratorConfig c) {
    try {
      c.Validate(s);
    } catch (const ValidationError& e) {
      return e.key();
    }
    return std::string("none");
  };
  GeneratorConfig c = SmallConfig();
  EXPECT_EQ(key_of(c), "none");
  c.users = 9;
  EXPECT_EQ(key_of(c), "users");
  c = SmallConfig();
  c.days = 15;
  EXPECT_EQ(key_of(c), "days");
  c = SmallConfig();
  c.base_rate = 1.0;
  EXPECT_EQ(key_of(c), "base_rate");
  c = SmallConfig();
  c.exposures_per_user = c.users;
  EXPECT_EQ(key_of(c), "exposures_per_user");
  EXPECT_THROW(GenerateSynthetic(s, c), ValidationError);
}

TEST(GenerateTest, SameSeedIsByteIdentical) {
  const std::string a = SerializeDataset(GenerateSynthetic(FeatureSchema::Default(), SmallConfig(9)));
  const std::string b = SerializeDataset(GenerateSynthetic(FeatureSchema::Default(), SmallConfig(9)));
  EXPECT_EQ(a, b);
  const std::string c = SerializeDataset(GenerateSynthetic(FeatureSchema::Default(), SmallConfig(10)));
  EXPECT_NE(a, c);
}

TEST_F(DataTest, ExposuresAreWellFormed) {
  const auto& cfg = ds().config();
  std::set<std::uint32_t> days;
  for (const Exposure& e : ds().exposures()) {
    days.insert(e.day);
    EXPECT_EQ(e.candidates.size(), cfg.exposures_per_user);
    EXPECT_EQ(e.clicked.size(), e.candidates.size());
    std::set<std::uint32_t> unique(e.candidates.begin(), e.candidates.end());
    EXPECT_EQ(unique.size(), e.candidates.size());
    EXPECT_FALSE(unique.count(e.source));
  }
  EXPECT_EQ(*days.begin(), 15u);
  EXPECT_EQ(*days.rbegin(), 19u);
  EXPECT_EQ(ds().exposures().size(), 5 * cfg.active_per_day);
}

TEST_F(DataTest, LatentLevelsGrowMonotonically) {
  for (std::uint32_t u = 0; u < ds().users(); ++u) {
    for (std::uint32_t d = 1; d < ds().days(); ++d) EXPECT_GT(ds().Level(u, d), ds().Level(u, d - 1));
  }
}

// Planted logit recomputed from the latents alone.
double OracleLogit(const Dataset& ds, std::uint32_t i, std::uint32_t j, std::uint32_t day) {
  const GeneratorConfig& c = ds.config();
  double taste = 0.0;
  for (std::size_t k = 0; k < kTasteDim; ++k) taste += ds.Taste(i)[k] * ds.Taste(j)[k];
  double style = 0.0;
  for (std::uint32_t lag = 1; lag <= 3; ++lag) {
    double dot = 0.0;
    for (std::size_t k = 0; k < kStyleDim; ++k) {
      dot += ds.Style(i, day - lag)[k] * ds.Style(j, day - lag)[k];
    }
    style += std::pow(0.5, lag) * dot;
  }
  const double gap = std::abs(ds.Level(i, day - 1) - ds.Level(j, day - 1));
  return ds.planted_bias() + c.taste_weight * taste + c.style_weight * style -
         c.level_weight * gap;
}

TEST_F(DataTest, LatentOracleSeparatesLabels) {
  std::vector<std::pair<double, int>> scored;
  for (const Exposure& e : ds().exposures()) {
    for (std::size_t k = 0; k < e.candidates.size(); ++k) {
      const double logit = OracleLogit(ds(), e.source, e.candidates[k], e.day);
      EXPECT_NEAR(logit, ds().PlantedLogit(e.source, e.candidates[k], e.day), 1e-9);
      scored.push_back({logit, e.clicked[k]});
    }
  }
  EXPECT_GT(RankSumAuc(scored), 0.9);
}

TEST(GenerateTest, BaseRateWithinTwentyPercentAtTenThousandUsers) {
  GeneratorConfig c;
  c.seed = 5;
  for (double rate : {0.08, 0.2}) {
    c.base_rate = rate;
    const Dataset ds = GenerateSynthetic(FeatureSchema::Default(), c);
    double clicks = 0, shown = 0;
    for (const Exposure& e : ds.exposures()) {
      for (auto k : e.clicked) clicks += k;
      shown += e.clicked.size();
    }
    EXPECT_NEAR(clicks / shown, rate, 0.2 * rate);
  }
}

Exposure MakeExposure(std::size_t positives, std::size_t negatives) {
  Exposure e{7, 3, {}, {}};
  for (std::uint32_t k = 0; k < positives + negatives; ++k) {
    e.candidates.push_back(100 + k);
    e.clicked.push_back(k < positives ? 1 : 0);
  }
  return e;
}

TEST(SampleNegativesTest, RatioAndShortfall) {
  const Exposure e = MakeExposure(2, 20);
  const auto neg = SampleNegatives(e, 4, 1);
  EXPECT_EQ(neg.size(), 8u);
  for (std::uint32_t n : neg) EXPECT_GE(n, 102u);
  EXPECT_EQ(std::set<std::uint32_t>(neg.begin(), neg.end()).size(), 8u);
  EXPECT_EQ(SampleNegatives(MakeExposure(1, 2), 4, 1).size(), 2u);
  EXPECT_TRUE(SampleNegatives(MakeExposure(0, 5), 4, 1).empty());
}

TEST(SampleNegativesTest, DeterministicAndUniform) {
  const Exposure e = MakeExposure(2, 20);
  EXPECT_EQ(SampleNegatives(e, 4, 42), SampleNegatives(e, 4, 42));
  std::map<std::uint32_t, int> counts;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    for (std::uint32_t n : SampleNegatives(e, 4, s)) ++counts[n];
  }
  ASSERT_EQ(counts.size(), 20u);
  // Each negative is chosen with probability 8/20; binomial sd ≈ 31.
  for (const auto& [id, n] : counts) EXPECT_NEAR(n, trials * 0.4, 150) << id;
}

TEST_F(DataTest, SamplesFollowFourToOneWherePossible) {
  std::map<std::tuple<std::uint32_t, std::uint32_t>, std::pair<int, int>> per_list;
  for (const Sample& s : ds().samples()) {
    auto& [pos, neg] = per_list[{s.source, s.day}];
    (s.label ? pos : neg) += 1;
  }
  for (const Exposure& e : ds().exposures()) {
    std::size_t positives = 0;
    for (auto k : e.clicked) positives += k;
    const auto it = per_list.find({e.source, e.day});
    if (positives == 0) {
      EXPECT_EQ(it, per_list.end());
      continue;
    }
    ASSERT_NE(it, per_list.end());
    const std::size_t available = e.candidates.size() - positives;
    EXPECT_EQ(std::size_t(it->second.first), positives);
    EXPECT_EQ(std::size_t(it->second.second), std::min(4 * positives, available));
  }
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> keys;
  for (const Sample& s : ds().samples()) keys.insert({s.source, s.target, s.day});
  EXPECT_EQ(keys.size(), ds().samples().size());
}

TEST_F(DataTest, TestSplitIsLastDayAndDisjoint) {
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> train_keys;
  std::size_t train = 0, val = 0;
  for (const Sample& s : ds().samples()) {
    if (s.split == Split::kTest) {
      EXPECT_EQ(s.day, 19u);
    } else {
      EXPECT_LT(s.day, 19u);
      (s.split == Split::kTrain ? train : val) += 1;
      if (s.split == Split::kTrain) train_keys.insert({s.source, s.target, s.day});
    }
  }
  for (const Sample& s : ds().SamplesIn(Split::kTest)) {
    EXPECT_FALSE(train_keys.count({s.source, s.target, s.day}));
  }
  EXPECT_EQ(ds().test_day(), 19u);
  EXPECT_NEAR(double(train) / double(train + val), 0.8, 1e-3);
}

TEST_F(DataTest, SplitRuleOnCraftedDays) {
  Dataset copy = ds();
  copy.samples().clear();
  for (std::uint32_t day = 1; day <= 16; ++day) {
    for (std::uint32_t k = 0; k < 10; ++k) copy.samples().push_back({k, k + 20, day, std::uint8_t(k % 2), Split::kTrain});
  }
  TemporalSplit(copy, 0.8, 1);
  for (const Sample& s : copy.samples()) EXPECT_EQ(s.split == Split::kTest, s.day == 16);

  copy.samples().resize(10);  // day 1 only
  EXPECT_THROW(TemporalSplit(copy, 0.8, 1), ContractError);
}

TEST_F(DataTest, TrainColumnsAreStandardizedAfterNormalization) {
  const auto train = ds().SamplesIn(Split::kTrain);
  auto check = [](const std::vector<std::vector<double>>& rows, const char* what) {
    const std::size_t width = rows.front().size();
    for (std::size_t c = 0; c < width; ++c) {
      double mean = 0;
      for (const auto& r : rows) mean += r[c];
      mean /= rows.size();
      double var = 0;
      for (const auto& r : rows) var += (r[c] - mean) * (r[c] - mean);
      var /= rows.size();
      EXPECT_NEAR(mean, 0.0, 1e-9) << what << " column " << c;
      EXPECT_NEAR(var, 1.0, 1e-6) << what << " column " << c;
    }
  };
  std::vector<std::vector<double>> seq, profile, link;
  for (const Sample& s : train) {
    for (std::uint32_t u : {s.source, s.target}) {
      const Tensor w = ds().Sequence(u, s.day);
      for (std::size_t r = 0; r < w.rows(); ++r) seq.push_back(w.Row(r).values());
      profile.push_back(ds().Profile(u).values());
    }
    link.push_back(ds().Link(s.source, s.target, s.day).values());
  }
  check(seq, "sequence");
  check(profile, "profile");
  check(link, "link");
  EXPECT_TRUE(ds().normalization().fitted);
}

TEST_F(DataTest, SequenceWindowsMostRecentDays) {
  const Normalization& n = ds().normalization();
  const Tensor w = ds().Sequence(5, 18);
  ASSERT_EQ(w.shape(), (Shape{15, 55}));
  for (std::size_t s = 0; s < 15; ++s) {
    const auto raw = ds().RawDaily(5, static_cast<std::uint32_t>(3 + s));
    for (std::size_t c = 0; c < 55; ++c) {
      EXPECT_DOUBLE_EQ(w.at(s, c), (raw[c] - n.seq_mean[c]) / n.seq_std[c]);
    }
  }
  // Day 4 has only 4 days of history: 11 zero rows on the left.
  const Tensor early = ds().Sequence(5, 4);
  for (std::size_t s = 0; s < 11; ++s) EXPECT_EQ(early.Row(s), Tensor({55}));
  EXPECT_NE(early.Row(11), Tensor({55}));
}

TEST_F(DataTest, BatchRowsMatchPerPairFeatures) {
  const auto val = ds().SamplesIn(Split::kVal);
  const std::vector<Sample> some(val.begin(), val.begin() + 5);
  const PairBatch b = ds().Batch(some);
  ASSERT_EQ(b.size, 5u);
  ASSERT_EQ(b.window(), 15u);
  for (std::size_t r = 0; r < 5; ++r) {
    const PairFeatures f = ds().Features(some[r].source, some[r].target, some[r].day);
    for (std::size_t s = 0; s < 15; ++s) {
      EXPECT_EQ(b.source_steps[s].Row(r), f.source_sequence.Row(s));
      EXPECT_EQ(b.target_steps[s].Row(r), f.target_sequence.Row(s));
    }
    EXPECT_EQ(b.source_profile.Row(r), f.source_profile);
    EXPECT_EQ(b.link.Row(r), f.link);
    EXPECT_EQ(b.labels[r], some[r].label);
  }
  EXPECT_EQ(ds().Link(1, 2, 17), ds().Link(1, 2, 17));
}

TEST_F(DataTest, RoundTripAndCorruption) {
  const std::string bytes = SerializeDataset(ds());
  const Dataset back = DeserializeDataset(bytes);
  EXPECT_TRUE(back == ds());
  EXPECT_EQ(SerializeDataset(back), bytes);
  EXPECT_EQ(back.Sequence(3, 17), ds().Sequence(3, 17));

  for (std::size_t cut : {std::size_t{4}, std::size_t{100}, bytes.size() / 2, bytes.size() - 1}) {
    try {
      DeserializeDataset(std::string_view(bytes).substr(0, cut));
      ADD_FAILURE() << "no error at cut " << cut;
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
    }
  }
  std::string bad = bytes;
  bad[8] = 7;
  EXPECT_THROW(DeserializeDataset(bad), VersionError);
  bad = bytes;
  bad[0] = 'x';
  EXPECT_THROW(DeserializeDataset(bad), FormatError);
  EXPECT_THROW(DeserializeDataset(bytes + "z"), FormatError);
}

TEST_F(DataTest, FileRoundTripAndCsvExport) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string bin = (dir / "dsen_data_test.bin").string();
  const std::string csv = (dir / "dsen_data_test.csv").string();
  SaveDataset(ds(), bin);
  EXPECT_TRUE(LoadDataset(bin) == ds());
  ExportSamplesCsv(ds(), csv);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "source,target,day,label,split,link_0,link_1,link_2,link_3,link_4,link_5,"
                    "link_6,link_7");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, ds().samples().size());
  std::filesystem::remove(bin);
  std::filesystem::remove(csv);
}

}  // namespace
}  // namespace dsen
