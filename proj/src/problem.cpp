#include "fibertopo/problem.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fibertopo/stress.hpp"

namespace fibertopo {

using nlohmann::json;

namespace {

// Reads keys from one JSON object, tracking which were consumed so unknown
// keys can be reported.
class Section {
public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return as<T>(obj_.at(key), key);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(join(key) + ": missing required key");
    return as<T>(obj_.at(key), key);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(key) + ": unknown key");
    }
  }

private:
  template <class T>
  T as(const json& v, const std::string& key) const {
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(join(key) + ": wrong value type");
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<NodeCoord> parse_nodes(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected a list of [row, col] pairs");
  std::vector<NodeCoord> out;
  for (const auto& item : v) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() ||
        !item[1].is_number_integer()) {
      throw ConfigError(path + ": expected a list of [row, col] pairs");
    }
    out.push_back({item[0].get<int>(), item[1].get<int>()});
  }
  return out;
}

json nodes_to_json(const std::vector<NodeCoord>& nodes) {
  json arr = json::array();
  for (const auto& n : nodes) arr.push_back({n.row, n.col});
  return arr;
}

std::vector<NodeCoord> node_line(int row0, int col0, int row1, int col1) {
  std::vector<NodeCoord> out;
  for (int r = row0; r <= row1; ++r) {
    for (int c = col0; c <= col1; ++c) out.push_back({r, c});
  }
  return out;
}

}  // namespace

ProblemConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  Section top(root, "");
  ProblemConfig cfg;
  cfg.name = top.get<std::string>("name", cfg.name);

  const json* geo = top.child("geometry");
  if (!geo) throw ConfigError("geometry: missing required key");
  {
    Section s(*geo, "geometry");
    auto& g = cfg.geometry;
    g.type = s.get<std::string>("type", g.type);
    g.nelx = s.require<int>("nelx");
    g.nely = s.require<int>("nely");
    g.elem_size = s.get<double>("elem_size", g.elem_size);
    g.thickness = s.get<double>("thickness", g.thickness);
    g.cutout_x = s.get<int>("cutout_x", g.cutout_x);
    g.cutout_y = s.get<int>("cutout_y", g.cutout_y);
    g.mask = s.get<std::vector<std::string>>("mask", g.mask);
    s.finish();
  }

  const json* mat = top.child("material");
  if (!mat) throw ConfigError("material: missing required key");
  {
    Section s(*mat, "material");
    cfg.material.e1 = s.require<double>("e1");
    cfg.material.e2 = s.require<double>("e2");
    cfg.material.g12 = s.require<double>("g12");
    cfg.material.nu12 = s.require<double>("nu12");
    cfg.material.nu21 = s.require<double>("nu21");
    s.finish();
  }

  const json* loads = top.child("loads");
  if (!loads) throw ConfigError("loads: missing required key");
  if (!loads->is_array()) throw ConfigError("loads: expected a list");
  for (size_t i = 0; i < loads->size(); ++i) {
    const std::string path = "loads[" + std::to_string(i) + "]";
    Section s((*loads)[i], path);
    LoadSpec l;
    const json* nodes = s.child("nodes");
    if (!nodes) throw ConfigError(path + ".nodes: missing required key");
    l.nodes = parse_nodes(*nodes, path + ".nodes");
    l.fx = s.get<double>("fx", 0.0);
    l.fy = s.get<double>("fy", 0.0);
    s.finish();
    cfg.loads.push_back(std::move(l));
  }

  const json* sup = top.child("supports");
  if (!sup) throw ConfigError("supports: missing required key");
  if (!sup->is_array()) throw ConfigError("supports: expected a list");
  for (size_t i = 0; i < sup->size(); ++i) {
    const std::string path = "supports[" + std::to_string(i) + "]";
    Section s((*sup)[i], path);
    SupportSpec sp;
    const json* nodes = s.child("nodes");
    if (!nodes) throw ConfigError(path + ".nodes: missing required key");
    sp.nodes = parse_nodes(*nodes, path + ".nodes");
    sp.fix_x = s.get<bool>("fix_x", true);
    sp.fix_y = s.get<bool>("fix_y", true);
    s.finish();
    cfg.supports.push_back(std::move(sp));
  }

  if (const json* opt = top.child("optimization")) {
    Section s(*opt, "optimization");
    cfg.volume_fraction = s.get<double>("volume_fraction", cfg.volume_fraction);
    cfg.penalty = s.get<double>("penalty", cfg.penalty);
    cfg.pnorm = s.get<int>("pnorm", cfg.pnorm);
    cfg.filter_radius = s.get<double>("filter_radius", cfg.filter_radius);
    cfg.rho_init = s.get<double>("rho_init", cfg.rho_init);
    cfg.theta_init = s.get<double>("theta_init", cfg.theta_init);
    cfg.tolerance = s.get<double>("tolerance", cfg.tolerance);
    cfg.max_iter = s.get<int>("max_iter", cfg.max_iter);
    cfg.density_floor = s.get<double>("density_floor", cfg.density_floor);
    s.finish();
  }

  if (const json* st = top.child("stress")) {
    Section s(*st, "stress");
    auto& t = cfg.stress;
    t.enabled = s.get<bool>("enabled", t.enabled);
    t.n_clusters = s.get<int>("n_clusters", t.n_clusters);
    t.points_per_cluster = s.get<int>("points_per_cluster", t.points_per_cluster);
    t.sigma1_tension = s.get<double>("sigma1_tension", t.sigma1_tension);
    t.sigma1_compression = s.get<double>("sigma1_compression", t.sigma1_compression);
    t.sigma2_tension = s.get<double>("sigma2_tension", t.sigma2_tension);
    t.sigma2_compression = s.get<double>("sigma2_compression", t.sigma2_compression);
    t.exclusion_radius = s.get<int>("exclusion_radius", t.exclusion_radius);
    s.finish();
  } else {
    cfg.stress.enabled = false;
  }

  if (const json* mm = top.child("mma")) {
    Section s(*mm, "mma");
    auto& m = cfg.mma;
    m.move_rho = s.get<double>("move_rho", m.move_rho);
    m.move_theta = s.get<double>("move_theta", m.move_theta);
    m.asy_init = s.get<double>("asy_init", m.asy_init);
    m.asy_incr = s.get<double>("asy_incr", m.asy_incr);
    m.asy_decr = s.get<double>("asy_decr", m.asy_decr);
    m.c = s.get<double>("c", m.c);
    s.finish();
  }

  if (const json* out = top.child("output")) {
    Section s(*out, "output");
    cfg.output_dir = s.get<std::string>("directory", cfg.output_dir);
    s.finish();
  }
  top.finish();

  validate_config(cfg);
  return cfg;
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ProblemConfig& cfg) {
  json root;
  root["name"] = cfg.name;
  const auto& g = cfg.geometry;
  root["geometry"] = {{"type", g.type},         {"nelx", g.nelx},
                      {"nely", g.nely},         {"elem_size", g.elem_size},
                      {"thickness", g.thickness}, {"cutout_x", g.cutout_x},
                      {"cutout_y", g.cutout_y}, {"mask", g.mask}};
  root["material"] = {{"e1", cfg.material.e1},     {"e2", cfg.material.e2},
                      {"g12", cfg.material.g12},   {"nu12", cfg.material.nu12},
                      {"nu21", cfg.material.nu21}};
  root["loads"] = json::array();
  for (const auto& l : cfg.loads) {
    root["loads"].push_back({{"nodes", nodes_to_json(l.nodes)}, {"fx", l.fx}, {"fy", l.fy}});
  }
  root["supports"] = json::array();
  for (const auto& s : cfg.supports) {
    root["supports"].push_back(
        {{"nodes", nodes_to_json(s.nodes)}, {"fix_x", s.fix_x}, {"fix_y", s.fix_y}});
  }
  root["optimization"] = {{"volume_fraction", cfg.volume_fraction},
                          {"penalty", cfg.penalty},
                          {"pnorm", cfg.pnorm},
                          {"filter_radius", cfg.filter_radius},
                          {"rho_init", cfg.rho_init},
                          {"theta_init", cfg.theta_init},
                          {"tolerance", cfg.tolerance},
                          {"max_iter", cfg.max_iter},
                          {"density_floor", cfg.density_floor}};
  const auto& t = cfg.stress;
  root["stress"] = {{"enabled", t.enabled},
                    {"n_clusters", t.n_clusters},
                    {"points_per_cluster", t.points_per_cluster},
                    {"sigma1_tension", t.sigma1_tension},
                    {"sigma1_compression", t.sigma1_compression},
                    {"sigma2_tension", t.sigma2_tension},
                    {"sigma2_compression", t.sigma2_compression},
                    {"exclusion_radius", t.exclusion_radius}};
  const auto& m = cfg.mma;
  root["mma"] = {{"move_rho", m.move_rho}, {"move_theta", m.move_theta},
                 {"asy_init", m.asy_init}, {"asy_incr", m.asy_incr},
                 {"asy_decr", m.asy_decr}, {"c", m.c}};
  root["output"] = {{"directory", cfg.output_dir}};
  return root.dump(2) + "\n";
}

void save_config(const ProblemConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path.string());
  out << serialize_config(config);
}

std::vector<bool> geometry_mask(const GeometrySpec& g) {
  if (g.nelx <= 0 || g.nely <= 0) throw ConfigError("geometry.nelx: nelx and nely must be positive");
  std::vector<bool> mask(static_cast<size_t>(g.nelx) * g.nely, true);
  if (g.type == "cantilever") {
    return mask;
  }
  if (g.type == "lbracket") {
    if (g.cutout_x <= 0 || g.cutout_x >= g.nelx || g.cutout_y <= 0 || g.cutout_y >= g.nely) {
      throw ConfigError("geometry.cutout_x: cutout must be smaller than the bounding box");
    }
    for (int r = 0; r < g.cutout_y; ++r) {
      for (int c = g.nelx - g.cutout_x; c < g.nelx; ++c) mask[r * g.nelx + c] = false;
    }
    return mask;
  }
  if (g.type == "custom") {
    if (static_cast<int>(g.mask.size()) != g.nely) {
      throw ConfigError("geometry.mask: expected nely rows");
    }
    for (int r = 0; r < g.nely; ++r) {
      if (static_cast<int>(g.mask[r].size()) != g.nelx) {
        throw ConfigError("geometry.mask: row " + std::to_string(r) + " must have nelx cells");
      }
      for (int c = 0; c < g.nelx; ++c) {
        const char ch = g.mask[r][c];
        if (ch != '#' && ch != '.') throw ConfigError("geometry.mask: use '#' and '.' only");
        mask[r * g.nelx + c] = ch == '#';
      }
    }
    return mask;
  }
  throw ConfigError("geometry.type: unknown geometry '" + g.type + "'");
}

void validate_config(const ProblemConfig& cfg) {
  try {
    cfg.material.validate();
  } catch (const ConstitutiveError& e) {
    throw ConfigError(e.what());
  }
  const auto mask = geometry_mask(cfg.geometry);
  const int active = static_cast<int>(std::count(mask.begin(), mask.end(), true));
  if (!(cfg.geometry.elem_size > 0.0)) throw ConfigError("geometry.elem_size: must be positive");
  if (!(cfg.geometry.thickness > 0.0)) throw ConfigError("geometry.thickness: must be positive");
  if (cfg.loads.empty()) throw ConfigError("loads: at least one load is required");
  if (cfg.supports.empty()) throw ConfigError("supports: at least one support is required");
  if (!(cfg.volume_fraction > 0.0 && cfg.volume_fraction <= 1.0)) {
    throw ConfigError("optimization.volume_fraction: must lie in (0, 1]");
  }
  if (!(cfg.penalty >= 1.0)) throw ConfigError("optimization.penalty: must be >= 1");
  if (cfg.pnorm < 2 || cfg.pnorm % 2 != 0) {
    throw ConfigError("optimization.pnorm: must be an even integer >= 2");
  }
  if (!(cfg.filter_radius > 0.0)) throw ConfigError("optimization.filter_radius: must be positive");
  if (!(cfg.rho_init >= 0.0 && cfg.rho_init <= 1.0)) {
    throw ConfigError("optimization.rho_init: must lie in [0, 1]");
  }
  if (!(std::abs(cfg.theta_init) <= std::numbers::pi)) {
    throw ConfigError("optimization.theta_init: must lie in [-pi, pi]");
  }
  if (!(cfg.tolerance > 0.0)) throw ConfigError("optimization.tolerance: must be positive");
  if (cfg.max_iter < 1) throw ConfigError("optimization.max_iter: must be at least 1");
  if (!(cfg.density_floor > 0.0 && cfg.density_floor < 1.0)) {
    throw ConfigError("optimization.density_floor: must lie in (0, 1)");
  }
  if (!(cfg.mma.move_rho > 0.0) || !(cfg.mma.move_theta > 0.0)) {
    throw ConfigError("mma.move_rho: move limits must be positive");
  }
  const auto& t = cfg.stress;
  if (t.enabled) {
    if (!(t.sigma1_tension > 0.0 && t.sigma1_compression > 0.0 && t.sigma2_tension > 0.0 &&
          t.sigma2_compression > 0.0)) {
      throw ConfigError("stress.sigma1_tension: all stress limits must be positive");
    }
    if (t.n_clusters < 1 || t.n_clusters > 2) {
      throw ConfigError("stress.n_clusters: must be 1 or 2");
    }
    if (t.points_per_cluster < min_points_per_cluster(active)) {
      throw ConfigError("stress.points_per_cluster: must be at least " +
                        std::to_string(min_points_per_cluster(active)) +
                        " (2.5% of the active elements)");
    }
  }
}

StructuredMesh build_mesh(const ProblemConfig& cfg) {
  const auto& g = cfg.geometry;
  try {
    return StructuredMesh::from_mask(g.nelx, g.nely, geometry_mask(g), g.elem_size, g.thickness);
  } catch (const MeshError& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
}

BoundaryConditions build_boundary_conditions(const ProblemConfig& cfg,
                                             const StructuredMesh& mesh) {
  BoundaryConditions bc;
  auto node_of = [&](const NodeCoord& c, const std::string& path) {
    const int n = mesh.node_at(c);
    if (n < 0) {
      throw ConfigError(path + ": node [" + std::to_string(c.row) + ", " +
                        std::to_string(c.col) + "] is not part of the active region");
    }
    return n;
  };
  std::set<int> fixed;
  for (size_t i = 0; i < cfg.supports.size(); ++i) {
    const auto& s = cfg.supports[i];
    for (const auto& c : s.nodes) {
      const int n = node_of(c, "supports[" + std::to_string(i) + "].nodes");
      if (s.fix_x) fixed.insert(2 * n);
      if (s.fix_y) fixed.insert(2 * n + 1);
    }
  }
  bc.fixed_dofs.assign(fixed.begin(), fixed.end());
  for (size_t i = 0; i < cfg.loads.size(); ++i) {
    const auto& l = cfg.loads[i];
    for (const auto& c : l.nodes) {
      const int n = node_of(c, "loads[" + std::to_string(i) + "].nodes");
      if (l.fx != 0.0) bc.loads.emplace_back(2 * n, l.fx);
      if (l.fy != 0.0) bc.loads.emplace_back(2 * n + 1, l.fy);
    }
  }
  try {
    bc.validate(mesh);
  } catch (const MeshError& e) {
    throw ConfigError(e.what());
  }
  return bc;
}

FeModel build_model(const ProblemConfig& cfg) {
  validate_config(cfg);
  StructuredMesh mesh = build_mesh(cfg);
  BoundaryConditions bc = build_boundary_conditions(cfg, mesh);
  return FeModel(std::move(mesh), std::move(bc), cfg.material, cfg.penalty, cfg.density_floor);
}

OptimizationSettings optimization_settings(const ProblemConfig& cfg) {
  OptimizationSettings s;
  s.volume_fraction = cfg.volume_fraction;
  s.pnorm = cfg.pnorm;
  s.filter_radius = cfg.filter_radius;
  s.rho_init = cfg.rho_init;
  s.theta_init = cfg.theta_init;
  s.tolerance = cfg.tolerance;
  s.max_iter = cfg.max_iter;
  s.move_rho = cfg.mma.move_rho;
  s.move_theta = cfg.mma.move_theta;
  s.mma.asy_init = cfg.mma.asy_init;
  s.mma.asy_incr = cfg.mma.asy_incr;
  s.mma.asy_decr = cfg.mma.asy_decr;
  s.mma.c = cfg.mma.c;
  if (cfg.stress.enabled) {
    StressConstraintSettings st;
    st.n_clusters = cfg.stress.n_clusters;
    st.points_per_cluster = cfg.stress.points_per_cluster;
    st.sigma1_tension = cfg.stress.sigma1_tension;
    st.sigma1_compression = cfg.stress.sigma1_compression;
    st.sigma2_tension = cfg.stress.sigma2_tension;
    st.sigma2_compression = cfg.stress.sigma2_compression;
    st.exclusion_radius = cfg.stress.exclusion_radius;
    s.stress = st;
  }
  return s;
}

OptimizationResult run_problem(const ProblemConfig& config, const IterationObserver& observer) {
  const FeModel model = build_model(config);
  return run_optimization(model, optimization_settings(config), observer);
}

namespace {

ProblemConfig cantilever_base() {
  ProblemConfig c;
  c.geometry.type = "cantilever";
  c.geometry.nelx = 60;
  c.geometry.nely = 40;
  c.geometry.elem_size = kCantileverElemSize;
  c.geometry.thickness = 1.0;
  c.material = OrthotropicMaterial::epoxy_glass();
  // 60 kN over the six lowest nodes of the free edge.
  c.loads.push_back({node_line(35, 60, 40, 60), 0.0, -10e3});
  c.supports.push_back({node_line(0, 0, 40, 0), true, true});
  c.volume_fraction = 0.25;
  c.penalty = 3.0;
  c.pnorm = 8;
  c.rho_init = 1.0;
  c.theta_init = -0.1;
  c.tolerance = 1e-3;
  c.stress.enabled = true;
  c.stress.n_clusters = 1;
  c.stress.points_per_cluster = 240;
  c.stress.sigma1_tension = c.stress.sigma1_compression = 60e3;
  c.stress.sigma2_tension = c.stress.sigma2_compression = 20e3;
  return c;
}

ProblemConfig lbracket_base() {
  ProblemConfig c;
  c.geometry.type = "lbracket";
  c.geometry.nelx = 50;
  c.geometry.nely = 50;
  c.geometry.cutout_x = 30;
  c.geometry.cutout_y = 30;
  c.geometry.elem_size = kLBracketElemSize;
  c.geometry.thickness = 1.0;
  c.material = OrthotropicMaterial::epoxy_glass();
  // 60 kN over six nodes at the tip of the horizontal arm's top edge.
  c.loads.push_back({node_line(30, 45, 30, 50), 0.0, -10e3});
  // Top edge of the vertical arm.
  c.supports.push_back({node_line(0, 0, 0, 20), true, true});
  c.volume_fraction = 0.25;
  c.penalty = 3.0;
  c.pnorm = 8;
  c.rho_init = 1.0;
  c.theta_init = -0.1;
  c.stress.enabled = true;
  c.stress.n_clusters = 1;
  c.stress.points_per_cluster = 40;
  c.stress.sigma1_tension = c.stress.sigma1_compression = 5e3;
  c.stress.sigma2_tension = c.stress.sigma2_compression = 4e3;
  return c;
}

}  // namespace

ProblemConfig build_case_study(int id, const std::string& variant) {
  ProblemConfig c;
  switch (id) {
    case 1: {
      c = cantilever_base();
      const std::string v = variant.empty() ? "constrained" : variant;
      if (v == "unconstrained") {
        c.stress.enabled = false;
      } else if (v != "constrained") {
        throw ConfigError("variant: case 1 accepts constrained | unconstrained");
      }
      c.name = "case1-" + v;
      break;
    }
    case 2: {
      c = lbracket_base();
      const std::string v = variant.empty() ? "40" : variant;
      if (v == "40") {
        c.stress.points_per_cluster = 40;
      } else if (v == "80") {
        c.stress.points_per_cluster = 80;
      } else {
        throw ConfigError("variant: case 2 accepts 40 | 80");
      }
      c.name = "case2-" + v;
      break;
    }
    case 3: {
      c = lbracket_base();
      if (!variant.empty() && variant != "2x40") {
        throw ConfigError("variant: case 3 accepts 2x40");
      }
      c.stress.n_clusters = 2;
      c.stress.points_per_cluster = 40;
      c.name = "case3-2x40";
      break;
    }
    case 4: {
      c = cantilever_base();
      const std::string v = variant.empty() ? "8" : variant;
      if (v != "4" && v != "6" && v != "8" && v != "10") {
        throw ConfigError("variant: case 4 accepts 4 | 6 | 8 | 10");
      }
      c.pnorm = std::stoi(v);
      c.rho_init = 0.25;
      c.theta_init = 0.1;
      c.stress.points_per_cluster = 120;
      c.stress.sigma1_tension = c.stress.sigma1_compression = 60e3;
      c.stress.sigma2_tension = c.stress.sigma2_compression = 25e3;
      c.name = "case4-p" + v;
      break;
    }
    default:
      throw ConfigError("case: unknown case study " + std::to_string(id) + " (expected 1..4)");
  }
  c.output_dir = "results/" + c.name;
  validate_config(c);
  return c;
}

}  // namespace fibertopo
