#include "calm/heatmap.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "calm/error.hpp"
#include "calm/inference.hpp"
#include "calm/io.hpp"
#include "calm/statement.hpp"

namespace calm {

Heatmap compute_heatmap(const Scene& scene, const std::string& statement,
                        const ProviderSet& providers, const HeatmapConfig& cfg) {
  if (cfg.resolution < 1) throw InvalidArgument("resolution must be positive");
  if (cfg.probe_w < 1 || cfg.probe_w > scene.width || cfg.probe_h < 1 || cfg.probe_h > scene.height) {
    throw InvalidArgument("probe size must fit inside the scene");
  }
  const Statement ast = parse_statement(statement);
  const GroundedStatement probe = validate(ast, scene);
  std::set<std::string> used;
  for (const PredicateInstance& p : probe.atoms) {
    for (int i = 0; i < p.arity; ++i) {
      const EntityState& e = probe.entities[static_cast<std::size_t>(p.args[static_cast<std::size_t>(i)])];
      if (e.kind == EntityKind::variable) used.insert(e.id);
    }
  }
  if (used.size() != 1) {
    throw InvalidArgument("heatmap needs exactly one variable entity; statement uses " +
                          std::to_string(used.size()));
  }
  const std::string var = *used.begin();

  Scene s = scene;
  s.variables.clear();
  VariableDecl v = scene.full_variable(var);
  v.domains[attr_index(Attr::w)] = AttrDomain::at(cfg.probe_w);
  v.domains[attr_index(Attr::h)] = AttrDomain::at(cfg.probe_h);
  s.variables.push_back(v);
  const GroundedStatement st = validate(ast, s);
  const int e = st.entity_index(var);
  const int fx = st.free_index(e, Attr::x);
  const int fy = st.free_index(e, Attr::y);

  Heatmap h;
  h.resolution = cfg.resolution;
  h.statement = statement;
  h.scene_id = scene.id;
  h.probe_w = cfg.probe_w;
  h.probe_h = cfg.probe_h;
  h.cells.reserve(static_cast<std::size_t>(cfg.resolution) * static_cast<std::size_t>(cfg.resolution));
  Grounding g;
  g.values.assign(st.order.size(), 0);
  for (int row = 0; row < cfg.resolution; ++row) {
    const int y = static_cast<int>(std::floor((row + 0.5) * scene.height / cfg.resolution));
    for (int col = 0; col < cfg.resolution; ++col) {
      const int x = static_cast<int>(std::floor((col + 0.5) * scene.width / cfg.resolution));
      if (fx >= 0) g.values[static_cast<std::size_t>(fx)] = x;
      if (fy >= 0) g.values[static_cast<std::size_t>(fy)] = y;
      h.cells.push_back(evaluate(st, g, providers));
    }
  }
  return h;
}

std::string heatmap_csv(const Heatmap& h) {
  std::string out;
  char buf[32];
  for (int row = 0; row < h.resolution; ++row) {
    for (int col = 0; col < h.resolution; ++col) {
      if (col) out.push_back(',');
      auto res = std::to_chars(buf, buf + sizeof buf, h.at(col, row));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

std::string heatmap_pgm(const Heatmap& h) {
  std::string out = "P5\n" + std::to_string(h.resolution) + " " + std::to_string(h.resolution) + "\n255\n";
  for (double t : h.cells) {
    const long v = std::lround(255.0 * std::clamp(t, 0.0, 1.0));
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

void write_heatmap(const Heatmap& h, const std::string& stem) {
  write_file_atomic(stem + ".csv", heatmap_csv(h));
  write_file_atomic(stem + ".pgm", heatmap_pgm(h));
}

}  // namespace calm
