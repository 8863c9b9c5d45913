#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include "fibertopo/problem.hpp"

using namespace fibertopo;

namespace {

const char* kMinimal = R"({
  "geometry": {"nelx": 4, "nely": 2},
  "material": {"e1": 1e9, "e2": 1e9, "g12": 0.4e9, "nu12": 0.25, "nu21": 0.25},
  "loads": [{"nodes": [[2, 4]], "fy": -1.0}],
  "supports": [{"nodes": [[0, 0], [1, 0], [2, 0]]}]
})";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const ProblemConfig c = parse_config(kMinimal);
  CHECK(c.geometry.type == "cantilever");
  CHECK(c.volume_fraction == 0.25);
  CHECK(c.pnorm == 8);
  CHECK(c.filter_radius == 1.5);
  CHECK_FALSE(c.stress.enabled);
  CHECK(c.loads.size() == 1);
  CHECK(c.supports[0].nodes.size() == 3);
  const FeModel m = build_model(c);
  CHECK(m.num_elements() == 8);
  CHECK(m.num_free_dofs() == 2 * 15 - 6);
  CHECK_FALSE(optimization_settings(c).stress.has_value());
}

TEST_CASE("config errors name the offending key") {
  CHECK(error_of("{").rfind("config", 0) == 0);
  CHECK(error_of(replace(kMinimal, R"("material": {"e1": 1e9, "e2": 1e9, "g12": 0.4e9, "nu12": 0.25, "nu21": 0.25},)", ""))
            .rfind("material", 0) == 0);
  CHECK(error_of(replace(kMinimal, R"("nelx": 4,)", "")).find("nelx") != std::string::npos);
  CHECK(error_of(replace(kMinimal, R"("nely": 2})", R"("nely": 2, "colour": 1})"))
            .find("colour") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"e2\": 1e9", "\"e2\": -1e9")).find("e2") != std::string::npos);
  try {
    build_model(parse_config(replace(kMinimal, "[[2, 4]]", "[[2, 9]]")));
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("loads[0].nodes", 0) == 0);
  }
  CHECK(!error_of(replace(kMinimal, "\"loads\"", "\"optimization\": {\"pnorm\": 7}, \"loads\"")).empty());
  CHECK(!error_of(replace(kMinimal, "\"loads\"",
                          "\"optimization\": {\"volume_fraction\": 1.5}, \"loads\"")).empty());
}

TEST_CASE("presets") {
  const ProblemConfig c1 = build_case_study(1);
  CHECK(c1.name == "case1-constrained");
  CHECK(c1.geometry.nelx == 60);
  CHECK(c1.geometry.nely == 40);
  CHECK(c1.stress.enabled);
  CHECK(c1.stress.n_clusters == 1);
  CHECK(c1.stress.points_per_cluster == 240);
  CHECK(std::min(c1.stress.sigma1_tension, c1.stress.sigma1_compression) == 60e3);
  CHECK(std::min(c1.stress.sigma2_tension, c1.stress.sigma2_compression) == 20e3);
  CHECK(c1.rho_init == 1.0);
  CHECK(c1.theta_init == -0.1);
  CHECK(c1.volume_fraction == 0.25);
  CHECK(c1.penalty == 3.0);
  CHECK(c1.pnorm == 8);
  CHECK(c1.material == OrthotropicMaterial::epoxy_glass());
  CHECK_FALSE(build_case_study(1, "unconstrained").stress.enabled);

  const ProblemConfig c2 = build_case_study(2);
  CHECK(c2.geometry.type == "lbracket");
  CHECK(c2.stress.points_per_cluster == 40);
  CHECK(build_case_study(2, "80").stress.points_per_cluster == 80);
  const ProblemConfig c3 = build_case_study(3);
  CHECK(c3.stress.n_clusters == 2);
  CHECK(c3.stress.points_per_cluster == 40);
  const auto mask = geometry_mask(c2.geometry);
  CHECK(std::count(mask.begin(), mask.end(), true) ==
        c2.geometry.nelx * c2.geometry.nely - c2.geometry.cutout_x * c2.geometry.cutout_y);

  for (const char* p : {"4", "6", "8", "10"}) {
    const ProblemConfig c4 = build_case_study(4, p);
    CHECK(c4.pnorm == std::stoi(p));
    CHECK(c4.rho_init == 0.25);
    CHECK(c4.theta_init == 0.1);
    CHECK(c4.stress.points_per_cluster == 120);
    CHECK(std::min(c4.stress.sigma2_tension, c4.stress.sigma2_compression) == 25e3);
  }
  CHECK_THROWS_AS(build_case_study(5), ConfigError);
  CHECK_THROWS_AS(build_case_study(2, "60"), ConfigError);
  for (int id = 1; id <= 4; ++id) CHECK_NOTHROW(build_model(build_case_study(id)));
}

TEST_CASE("serialization round trip") {
  for (int id = 1; id <= 4; ++id) {
    const ProblemConfig c = build_case_study(id);
    CHECK(parse_config(serialize_config(c)) == c);
  }
  const auto path = std::filesystem::temp_directory_path() / "fibertopo_roundtrip.json";
  ProblemConfig c = parse_config(kMinimal);
  c.geometry.type = "custom";
  c.geometry.mask = {"####", "##.."};
  c.loads[0].nodes = {{1, 2}};
  save_config(c, path);
  CHECK(load_config(path) == c);
  std::filesystem::remove(path);
  CHECK(build_mesh(c).num_elements() == 6);
  CHECK_THROWS_AS(load_config("/nonexistent/fibertopo.json"), ConfigError);
}

TEST_CASE("support nodes must exist") {
  ProblemConfig c = parse_config(kMinimal);
  c.geometry.type = "custom";
  c.geometry.mask = {"####", "##.."};
  c.supports[0].nodes = {{2, 4}};
  CHECK_THROWS(build_model(c));
}
