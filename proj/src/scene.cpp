#include "calm/scene.hpp"

#include <algorithm>

#include "calm/error.hpp"

namespace calm {

using nlohmann::json;

std::string_view band_name(BandKind b) {
  switch (b) {
    case BandKind::wall: return "wall";
    case BandKind::counter: return "counter";
    case BandKind::floor: return "floor";
  }
  return "?";
}

BandKind parse_band(std::string_view name) {
  if (name == "wall") return BandKind::wall;
  if (name == "counter") return BandKind::counter;
  if (name == "floor") return BandKind::floor;
  throw ConfigError("unknown band kind '" + std::string(name) + "'");
}

Interval Scene::attr_range(Attr a) const {
  switch (a) {
    case Attr::x: return {0, width - 1};
    case Attr::y: return {0, height - 1};
    case Attr::w: return {1, width};
    case Attr::h: return {1, height};
  }
  return {0, 0};
}

VariableDecl Scene::full_variable(const std::string& id) const {
  VariableDecl v{id, {}};
  for (Attr a : kAllAttrs) {
    const Interval r = attr_range(a);
    v.domains[attr_index(a)] = AttrDomain::range(r.lo, r.hi);
  }
  return v;
}

const SceneObject* Scene::find_object(const std::string& oid) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const SceneObject& o) { return o.id == oid; });
  return it == objects.end() ? nullptr : &*it;
}

const VariableDecl* Scene::find_variable(const std::string& vid) const {
  auto it = std::find_if(variables.begin(), variables.end(),
                         [&](const VariableDecl& v) { return v.id == vid; });
  return it == variables.end() ? nullptr : &*it;
}

VariableDecl* Scene::find_variable(const std::string& vid) {
  auto it = std::find_if(variables.begin(), variables.end(),
                         [&](const VariableDecl& v) { return v.id == vid; });
  return it == variables.end() ? nullptr : &*it;
}

bool Scene::has_image_context(const std::string& cid) const {
  return std::find(image_contexts.begin(), image_contexts.end(), cid) != image_contexts.end();
}

json box_to_json(const Box& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Box box_from_json(const json& j) {
  return Box{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
             j.at("h").get<int>()};
}

namespace {

json domain_to_json(const AttrDomain& d) {
  if (d.fixed) return d.value;
  return json::array({d.lo, d.hi});
}

AttrDomain domain_from_json(const json& j) {
  if (j.is_number_integer()) return AttrDomain::at(j.get<int>());
  if (j.is_array() && j.size() == 2) {
    const int lo = j[0].get<int>();
    const int hi = j[1].get<int>();
    if (lo > hi) throw ConfigError("variable domain has lo > hi");
    return AttrDomain::range(lo, hi);
  }
  throw ConfigError("variable domain must be an integer or a [lo, hi] pair");
}

}  // namespace

json scene_to_json(const Scene& scene) {
  json j;
  if (!scene.id.empty()) j["id"] = scene.id;
  j["width"] = scene.width;
  j["height"] = scene.height;
  j["k"] = scene.k;
  j["bands"] = json::array();
  for (const Band& b : scene.bands) {
    j["bands"].push_back({{"kind", band_name(b.kind)}, {"y0", b.y0}, {"y1", b.y1}});
  }
  j["objects"] = json::array();
  for (const SceneObject& o : scene.objects) {
    j["objects"].push_back({{"id", o.id}, {"category", o.category}, {"box", box_to_json(o.box)}});
  }
  j["variables"] = json::array();
  for (const VariableDecl& v : scene.variables) {
    json d;
    for (Attr a : kAllAttrs) d[std::string(attr_name(a))] = domain_to_json(v.domains[attr_index(a)]);
    j["variables"].push_back({{"id", v.id}, {"domains", d}});
  }
  j["contexts"] = scene.image_contexts;
  return j;
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.id = j.value("id", std::string{});
  s.width = j.value("width", 128);
  s.height = j.value("height", 128);
  s.k = j.value("k", 2);
  if (s.width < 1 || s.height < 1) throw ConfigError("scene dimensions must be positive");
  if (j.contains("bands")) {
    for (const json& b : j.at("bands")) {
      s.bands.push_back({parse_band(b.at("kind").get<std::string>()), b.at("y0").get<int>(),
                         b.at("y1").get<int>()});
    }
  }
  if (j.contains("objects")) {
    for (const json& o : j.at("objects")) {
      s.objects.push_back(
          {o.at("id").get<std::string>(), o.value("category", std::string{}), box_from_json(o.at("box"))});
    }
  }
  if (j.contains("variables")) {
    for (const json& v : j.at("variables")) {
      VariableDecl decl = s.full_variable(v.at("id").get<std::string>());
      if (v.contains("domains")) {
        for (const auto& [name, dom] : v.at("domains").items()) {
          auto a = parse_attr(name);
          if (!a) throw ConfigError("unknown attribute '" + name + "' in variable " + decl.id);
          decl.domains[attr_index(*a)] = domain_from_json(dom);
        }
      }
      s.variables.push_back(std::move(decl));
    }
  }
  if (j.contains("contexts")) s.image_contexts = j.at("contexts").get<std::vector<std::string>>();
  return s;
}

}  // namespace calm
