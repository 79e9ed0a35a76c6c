#include "calm/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>

namespace calm {

namespace {

void l2_normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double e : v) sq += e * e;
  if (sq <= 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& e : v) e *= inv;
}

std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

}  // namespace

std::vector<double> occupancy_block(const Scene& scene) {
  std::vector<double> cells(kOccupancyDim, 0.0);
  if (scene.objects.empty()) return cells;

  // Rasterise the union of boxes, then average into an 8x8 grid.
  const int W = scene.width;
  const int H = scene.height;
  std::vector<unsigned char> mask(static_cast<std::size_t>(W) * H, 0);
  for (const SceneObject& o : scene.objects) {
    const int x0 = std::max(0, o.box.left());
    const int x1 = std::min(W - 1, o.box.right());
    const int y0 = std::max(0, o.box.top());
    const int y1 = std::min(H - 1, o.box.bottom());
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) mask[static_cast<std::size_t>(y) * W + x] = 1;
    }
  }
  std::vector<double> counts(kOccupancyDim, 0.0);
  std::vector<double> totals(kOccupancyDim, 0.0);
  for (int y = 0; y < H; ++y) {
    const int cy = std::min(kRasterCells - 1, y * kRasterCells / H);
    for (int x = 0; x < W; ++x) {
      const int cx = std::min(kRasterCells - 1, x * kRasterCells / W);
      const int c = cy * kRasterCells + cx;
      totals[c] += 1.0;
      counts[c] += mask[static_cast<std::size_t>(y) * W + x];
    }
  }
  for (int c = 0; c < kOccupancyDim; ++c) {
    cells[c] = totals[c] > 0.0 ? counts[c] / totals[c] : 0.0;
  }
  l2_normalize(cells);
  return cells;
}

std::vector<double> text_block(std::string_view text) {
  std::vector<double> bag(kTextDim, 0.0);
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      bag[fnv1a(token) % kTextDim] += 1.0;
      token.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  l2_normalize(bag);
  return bag;
}

ContextEmbedding embed_context(const Scene& scene, std::string_view text) {
  ContextEmbedding out = occupancy_block(scene);
  const std::vector<double> words = text_block(text);
  out.insert(out.end(), words.begin(), words.end());
  return out;
}

}  // namespace calm
