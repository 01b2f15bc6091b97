#include <fstream>

#include <fmt/format.h>

#include "dsen/binary_io.h"
#include "dsen/data.h"

namespace dsen {
namespace {

constexpr std::string_view kMagic = "DSENDATA";

void WriteGroups(BinaryWriter& w, const std::vector<FeatureGroup>& groups) {
  w.U32(static_cast<std::uint32_t>(groups.size()));
  for (const FeatureGroup& g : groups) {
    w.String(g.name);
    w.U64(g.size);
  }
}

std::vector<FeatureGroup> ReadGroups(BinaryReader& r) {
  const std::uint32_t n = r.U32();
  std::vector<FeatureGroup> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    FeatureGroup g;
    g.name = r.String();
    g.size = r.U64();
    out.push_back(std::move(g));
  }
  return out;
}

void WriteTensor(BinaryWriter& w, const Tensor& t) {
  w.U64(t.rows());
  w.U64(t.cols());
  w.F64Array(t.values());
}

Tensor ReadTensor(BinaryReader& r, std::size_t rows, std::size_t cols, const char* what) {
  const std::size_t at = r.offset();
  const std::uint64_t file_rows = r.U64(), file_cols = r.U64();
  std::vector<double> values = r.F64Array();
  if (file_rows != rows || file_cols != cols || values.size() != rows * cols) {
    throw FormatError(fmt::format("dataset: {} at offset {} is {}x{}, expected {}x{}", what, at,
                                  file_rows, file_cols, rows, cols));
  }
  return Tensor({rows, cols}, std::move(values));
}

std::vector<double> ReadArray(BinaryReader& r, std::size_t expected, const char* what) {
  const std::size_t at = r.offset();
  std::vector<double> v = r.F64Array();
  if (v.size() != expected) {
    throw FormatError(fmt::format("dataset: {} at offset {} holds {} values, expected {}", what,
                                  at, v.size(), expected));
  }
  return v;
}

void CheckId(std::uint64_t v, std::uint64_t bound, const char* what, std::size_t at) {
  if (v >= bound) {
    throw FormatError(fmt::format("dataset: {} {} out of range at offset {}", what, v, at));
  }
}

}  // namespace

std::string SerializeDataset(const Dataset& ds) {
  BinaryWriter w;
  w.Bytes(kMagic);
  w.U32(kDatasetVersion);

  const FeatureSchema& s = ds.schema_;
  w.U64(s.seq_features);
  w.U64(s.profile_features);
  w.U64(s.window);
  w.U64(s.link_features);
  WriteGroups(w, s.profile_groups);
  WriteGroups(w, s.sequence_groups);

  const GeneratorConfig& c = ds.config_;
  w.U64(c.users);
  w.U64(c.days);
  w.U64(c.active_per_day);
  w.U64(c.exposures_per_user);
  w.F64(c.noise);
  w.F64(c.base_rate);
  w.F64(c.taste_weight);
  w.F64(c.style_weight);
  w.F64(c.level_weight);
  w.U64(c.negative_ratio);
  w.F64(c.train_fraction);
  w.U64(c.seed);
  w.F64(ds.planted_bias_);

  WriteTensor(w, ds.daily_mixing_);
  WriteTensor(w, ds.profile_mixing_);

  w.F64Array(ds.taste_);
  w.F64Array(ds.extras_);
  w.F64Array(ds.level_);
  w.F64Array(ds.style_);
  w.F64Array(ds.activity_);

  w.U64(ds.exposures_.size());
  for (const Exposure& e : ds.exposures_) {
    w.U32(e.source);
    w.U32(e.day);
    w.U32(static_cast<std::uint32_t>(e.candidates.size()));
    for (std::uint32_t cand : e.candidates) w.U32(cand);
    for (std::uint8_t clicked : e.clicked) w.U8(clicked);
  }

  w.U64(ds.samples_.size());
  for (const Sample& smp : ds.samples_) {
    w.U32(smp.source);
    w.U32(smp.target);
    w.U32(smp.day);
    w.U8(smp.label);
    w.U8(static_cast<std::uint8_t>(smp.split));
  }

  const Normalization& n = ds.norm_;
  w.U8(n.fitted ? 1 : 0);
  for (const auto* v : {&n.seq_mean, &n.seq_std, &n.profile_mean, &n.profile_std, &n.link_mean,
                        &n.link_std}) {
    w.F64Array(*v);
  }
  return w.Release();
}

Dataset DeserializeDataset(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.Bytes(kMagic.size()) != kMagic) throw FormatError("not a dataset file: bad magic");
  const std::uint32_t version = r.U32();
  if (version != kDatasetVersion) {
    throw VersionError(fmt::format("dataset version {} unsupported (expected {})", version,
                                   kDatasetVersion));
  }

  FeatureSchema s;
  s.seq_features = r.U64();
  s.profile_features = r.U64();
  s.window = r.U64();
  s.link_features = r.U64();
  s.profile_groups = ReadGroups(r);
  s.sequence_groups = ReadGroups(r);

  GeneratorConfig c;
  c.users = r.U64();
  c.days = r.U64();
  c.active_per_day = r.U64();
  c.exposures_per_user = r.U64();
  c.noise = r.F64();
  c.base_rate = r.F64();
  c.taste_weight = r.F64();
  c.style_weight = r.F64();
  c.level_weight = r.F64();
  c.negative_ratio = r.U64();
  c.train_fraction = r.F64();
  c.seed = r.U64();
  try {
    s.Validate();
    c.Validate(s);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("dataset header: ") + e.what());
  }
  // Raw feature tables are users·days·features doubles in memory.
  if (c.users > (1u << 24) || c.days > (1u << 16) || s.seq_features > (1u << 16) ||
      s.profile_features > (1u << 16) || s.link_features > (1u << 16) ||
      c.users * c.days * s.seq_features > (std::size_t{1} << 32)) {
    throw FormatError("dataset header: implausible sizes");
  }

  Dataset ds(s, c);
  ds.planted_bias_ = r.F64();
  ds.daily_mixing_ = ReadTensor(r, s.seq_features, kDailyLatents, "daily mixing");
  ds.profile_mixing_ = ReadTensor(r, s.profile_features, kProfileLatents, "profile mixing");
  ds.taste_ = ReadArray(r, c.users * kTasteDim, "taste table");
  ds.extras_ = ReadArray(r, c.users * kProfileExtras, "profile extras");
  ds.level_ = ReadArray(r, c.users * c.days, "level table");
  ds.style_ = ReadArray(r, c.users * c.days * kStyleDim, "style table");
  ds.activity_ = ReadArray(r, c.users * c.days, "activity table");

  const std::uint64_t n_exposures = r.U64();
  for (std::uint64_t i = 0; i < n_exposures; ++i) {
    const std::size_t at = r.offset();
    Exposure e;
    e.source = r.U32();
    e.day = r.U32();
    CheckId(e.source, c.users, "exposure source", at);
    CheckId(e.day, c.days, "exposure day", at);
    const std::uint32_t n = r.U32();
    if (std::uint64_t{n} * 5 > r.remaining()) {
      throw FormatError(fmt::format("truncated input at offset {}: exposure list of {} entries",
                                    r.offset(), n));
    }
    e.candidates.resize(n);
    for (auto& cand : e.candidates) {
      cand = r.U32();
      CheckId(cand, c.users, "candidate", at);
    }
    e.clicked.resize(n);
    for (auto& clicked : e.clicked) clicked = r.U8();
    ds.exposures_.push_back(std::move(e));
  }

  const std::uint64_t n_samples = r.U64();
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const std::size_t at = r.offset();
    Sample smp;
    smp.source = r.U32();
    smp.target = r.U32();
    smp.day = r.U32();
    smp.label = r.U8();
    const std::uint8_t split = r.U8();
    CheckId(smp.source, c.users, "sample source", at);
    CheckId(smp.target, c.users, "sample target", at);
    CheckId(smp.day, c.days, "sample day", at);
    CheckId(smp.label, 2, "sample label", at);
    CheckId(split, 3, "sample split", at);
    smp.split = static_cast<Split>(split);
    ds.samples_.push_back(smp);
  }

  Normalization n;
  n.fitted = r.U8() != 0;
  n.seq_mean = ReadArray(r, s.seq_features, "sequence means");
  n.seq_std = ReadArray(r, s.seq_features, "sequence stds");
  n.profile_mean = ReadArray(r, s.profile_features, "profile means");
  n.profile_std = ReadArray(r, s.profile_features, "profile stds");
  n.link_mean = ReadArray(r, s.link_features, "link means");
  n.link_std = ReadArray(r, s.link_features, "link stds");
  ds.norm_ = std::move(n);
  if (!r.AtEnd()) {
    throw FormatError(fmt::format("dataset: trailing bytes at offset {}", r.offset()));
  }
  ds.Materialize();
  return ds;
}

void SaveDataset(const Dataset& dataset, const std::string& path) {
  WriteFile(path, SerializeDataset(dataset));
}

Dataset LoadDataset(const std::string& path) { return DeserializeDataset(ReadFile(path)); }

void ExportSamplesCsv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "source,target,day,label,split";
  for (std::size_t c = 0; c < dataset.schema().link_features; ++c) out << ",link_" << c;
  out << '\n';
  for (const Sample& s : dataset.samples()) {
    out << fmt::format("{},{},{},{},{}", s.source, s.target, s.day, s.label, SplitName(s.split));
    const Tensor link = dataset.Link(s.source, s.target, s.day);
    for (double v : link.data()) out << fmt::format(",{:.17g}", v);
    out << '\n';
  }
}

}  // namespace dsen
