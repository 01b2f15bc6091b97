#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsen/tape.h"
#include "dsen/tensor.h"

namespace dsen {

// Features of one (source, target) pair as the models consume them.
struct PairFeatures {
  Tensor source_sequence;  // window×seq_features, oldest day first
  Tensor source_profile;   // profile_features
  Tensor target_sequence;
  Tensor target_profile;
  Tensor link;             // link_features
};

// Column-batched pair features: one pair per row, sequences stored time-major.
struct PairBatch {
  std::size_t size = 0;
  std::vector<Tensor> source_steps;  // window tensors, each size×seq_features
  std::vector<Tensor> target_steps;
  Tensor source_profile;  // size×profile_features
  Tensor target_profile;
  Tensor link;            // size×link_features
  std::vector<double> labels;  // optional; empty for pure scoring

  std::size_t window() const { return source_steps.size(); }
};

PairBatch MakeBatch(std::span<const PairFeatures> pairs);

// Keeps the most recent `window` rows of a days×features sequence and
// left-pads with zero rows when fewer days exist.
Tensor WindowSequence(const Tensor& sequence, std::size_t window);

// Tape constants for one side of a batch.
struct TowerInput {
  std::vector<Var> steps;
  Var profile;
};

TowerInput SourceTower(Tape& tape, const PairBatch& batch);
TowerInput TargetTower(Tape& tape, const PairBatch& batch);

}  // namespace dsen
