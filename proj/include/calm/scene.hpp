#pragma once

#include <array>
#include <string>
#include <vector>

#include "calm/core.hpp"
#include "calm/domain_tree.hpp"
#include "json.hpp"

namespace calm {

enum class BandKind { wall, counter, floor };

std::string_view band_name(BandKind b);
BandKind parse_band(std::string_view name);

// Horizontal strip of the scene, rows [y0, y1].
struct Band {
  BandKind kind = BandKind::wall;
  int y0 = 0;
  int y1 = 0;
};

// A visible object; becomes a constant entity.
struct SceneObject {
  std::string id;
  std::string category;
  Box box;
};

// Either a fixed value or an integer range refined by a domain tree.
struct AttrDomain {
  bool fixed = false;
  int value = 0;
  int lo = 0;
  int hi = 0;

  static AttrDomain at(int v) { return {true, v, v, v}; }
  static AttrDomain range(int lo, int hi) { return {lo == hi, lo, lo, hi}; }
  Interval interval() const { return fixed ? Interval{value, value} : Interval{lo, hi}; }
};

// An entity whose placement is (partly) unknown.
struct VariableDecl {
  std::string id;
  std::array<AttrDomain, 4> domains;
};

struct Scene {
  std::string id;
  int width = 128;
  int height = 128;
  int k = 2;
  std::vector<Band> bands;
  std::vector<SceneObject> objects;
  std::vector<VariableDecl> variables;
  // Identifiers that bind to this scene's raster.
  std::vector<std::string> image_contexts{"img"};

  // Attribute ranges used for domains and input normalisation:
  // x in [0, W-1], y in [0, H-1], w in [1, W], h in [1, H].
  Interval attr_range(Attr a) const;

  // Variable spanning the full attribute ranges.
  VariableDecl full_variable(const std::string& id) const;

  const SceneObject* find_object(const std::string& id) const;
  const VariableDecl* find_variable(const std::string& id) const;
  VariableDecl* find_variable(const std::string& id);
  bool has_image_context(const std::string& id) const;
};

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

nlohmann::json box_to_json(const Box& b);
Box box_from_json(const nlohmann::json& j);

}  // namespace calm
