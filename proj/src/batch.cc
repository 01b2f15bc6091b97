#include "dsen/batch.h"

#include <algorithm>
#include <string>

namespace dsen {

Tensor WindowSequence(const Tensor& sequence, std::size_t window) {
  if (sequence.rank() != 2) {
    throw DimensionError("window: expected days x features, got " +
                         ShapeString(sequence.shape()));
  }
  const std::size_t days = sequence.rows();
  const std::size_t width = sequence.cols();
  Tensor out({window, width});
  const std::size_t keep = std::min(days, window);
  const std::size_t src_first = days - keep;
  const std::size_t dst_first = window - keep;
  std::copy_n(sequence.data().data() + src_first * width, keep * width,
              out.mutable_data().data() + dst_first * width);
  return out;
}

PairBatch MakeBatch(std::span<const PairFeatures> pairs) {
  if (pairs.empty()) throw ContractError("make_batch: no pairs");
  const PairFeatures& first = pairs.front();
  const std::size_t n = pairs.size();
  const std::size_t window = first.source_sequence.rows();
  const std::size_t d_s = first.source_sequence.cols();
  const std::size_t d_p = first.source_profile.size();
  const std::size_t d_l = first.link.size();

  PairBatch batch;
  batch.size = n;
  batch.source_steps.assign(window, Tensor({n, d_s}));
  batch.target_steps.assign(window, Tensor({n, d_s}));
  batch.source_profile = Tensor({n, d_p});
  batch.target_profile = Tensor({n, d_p});
  batch.link = Tensor({n, d_l});
  for (std::size_t i = 0; i < n; ++i) {
    const PairFeatures& p = pairs[i];
    if (p.source_sequence.shape() != first.source_sequence.shape() ||
        p.target_sequence.shape() != first.source_sequence.shape() ||
        p.source_profile.size() != d_p || p.target_profile.size() != d_p ||
        p.link.size() != d_l) {
      throw DimensionError("make_batch: pair " + std::to_string(i) +
                           " has inconsistent feature shapes");
    }
    for (std::size_t s = 0; s < window; ++s) {
      std::copy_n(p.source_sequence.data().data() + s * d_s, d_s,
                  batch.source_steps[s].mutable_data().data() + i * d_s);
      std::copy_n(p.target_sequence.data().data() + s * d_s, d_s,
                  batch.target_steps[s].mutable_data().data() + i * d_s);
    }
    std::copy_n(p.source_profile.data().data(), d_p,
                batch.source_profile.mutable_data().data() + i * d_p);
    std::copy_n(p.target_profile.data().data(), d_p,
                batch.target_profile.mutable_data().data() + i * d_p);
    std::copy_n(p.link.data().data(), d_l, batch.link.mutable_data().data() + i * d_l);
  }
  return batch;
}

namespace {

TowerInput Tower(Tape& tape, const std::vector<Tensor>& steps, const Tensor& profile) {
  TowerInput in;
  in.steps.reserve(steps.size());
  for (const Tensor& s : steps) in.steps.push_back(tape.Constant(s));
  in.profile = tape.Constant(profile);
  return in;
}

}  // namespace

TowerInput SourceTower(Tape& tape, const PairBatch& batch) {
  return Tower(tape, batch.source_steps, batch.source_profile);
}

TowerInput TargetTower(Tape& tape, const PairBatch& batch) {
  return Tower(tape, batch.target_steps, batch.target_profile);
}

}  // namespace dsen
