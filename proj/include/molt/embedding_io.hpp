#pragma once

#include <string>

#include "molt/dataset.hpp"
#include "molt/encoder.hpp"

namespace molt {

// Binary embedding container, one file per modality:
//   "MOL1" | u32 version=1 | u32 num_samples | u32 num_layers | u32 N |
//   u32 d | u32 label_arity | per sample: label payload, then
//   num_layers * N * d little-endian f32 in row-major layer order.
// Label payload: arity 1 -> u32 class index; arity k>1 -> k bytes of 0/1.
// num_layers 1 holds raw encoder inputs; >1 holds precomputed per-layer
// embeddings that bypass the stub encoders.
//
// Loaders validate magic, version and exact payload length and never return
// partial data. Round-trips are bit-exact.

void save_embedding_file(const Dataset& ds, Modality modality, const std::string& path);
void save_embeddings(const Dataset& ds, const std::string& dir);  // writes image.mol1 + text.mol1

Dataset load_embeddings(const std::string& dir);

}  // namespace molt
