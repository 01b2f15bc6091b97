#pragma once

#include <string>

#include "dsen/model.h"

namespace dsen {

// Checkpoint layout (all integers little-endian, floats IEEE-754 binary64):
//
//   "DSENCKPT"                      8 bytes
//   u32 version                     currently 1
//   u32 variant tag                 dsen=0 mlp=1 gru=2 attn=3 dsen_att=4
//   u64 m, k, t, h_evo, d_l         embedding width, views, window,
//                                   evolution width, link features
//   u64 seq_features, profile_features, gru_hidden, gru_layers, attention_heads
//   u64 n, then n × u64             MLP hidden widths
//   u64 tensor count, then per tensor:
//     u32 name length, name bytes
//     u32 rank, rank × u64 extents
//     u64 element count, element count × f64
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const Model& model);
Model DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Model& model, const std::string& path);
Model LoadCheckpoint(const std::string& path);

}  // namespace dsen
