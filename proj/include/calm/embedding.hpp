#pragma once

#include <string_view>
#include <vector>

#include "calm/scene.hpp"

namespace calm {

// Deterministic stand-in for a pretrained image/text encoder. Layout:
//   [0, 64)   8x8 object-occupancy raster (fraction of each cell covered by
//             any visible object), L2-normalised
//   [64, 96)  hashed bag-of-words of the text context, L2-normalised
// Both blocks are zero when their source is empty.
using ContextEmbedding = std::vector<double>;

inline constexpr int kRasterCells = 8;
inline constexpr int kOccupancyDim = kRasterCells * kRasterCells;
inline constexpr int kTextDim = 32;
inline constexpr int kEmbeddingDim = kOccupancyDim + kTextDim;
inline constexpr std::string_view kEmbedderVersion = "calm-synth-embed-v1";

ContextEmbedding embed_context(const Scene& scene, std::string_view text);

// Exposed for tests.
std::vector<double> occupancy_block(const Scene& scene);
std::vector<double> text_block(std::string_view text);

}  // namespace calm
