#pragma once

#include <string>
#include <vector>

#include "calm/predicates.hpp"
#include "calm/scene.hpp"

namespace calm {

struct HeatmapConfig {
  int resolution = 32;
  int probe_w = 16;
  int probe_h = 16;
};

// R x R statement truths, row-major with row = y. Cell (col, row) places the
// variable's center at pixel (floor((col + 0.5) W / R), floor((row + 0.5) H / R))
// with size (probe_w, probe_h).
struct Heatmap {
  int resolution = 0;
  std::vector<double> cells;
  std::string statement;
  std::string scene_id;
  int probe_w = 0;
  int probe_h = 0;

  double at(int col, int row) const {
    return cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(resolution) +
                 static_cast<std::size_t>(col)];
  }
};

// Requires exactly one variable entity in the statement; throws
// InvalidArgument otherwise.
Heatmap compute_heatmap(const Scene& scene, const std::string& statement,
                        const ProviderSet& providers, const HeatmapConfig& cfg);

std::string heatmap_csv(const Heatmap& h);
// Binary greymap, value round(255 t).
std::string heatmap_pgm(const Heatmap& h);

// Writes <stem>.csv and <stem>.pgm atomically.
void write_heatmap(const Heatmap& h, const std::string& stem);

}  // namespace calm
