// Problem definitions: configuration schema, JSON parsing, built-in case
// studies, and construction of the finite element model they describe.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fibertopo/errors.hpp"
#include "fibertopo/fem.hpp"
#include "fibertopo/material.hpp"
#include "fibertopo/mesh.hpp"
#include "fibertopo/optimizer.hpp"

namespace fibertopo {

struct GeometrySpec {
  std::string type = "cantilever";  ///< cantilever | lbracket | custom
  int nelx = 60;
  int nely = 40;
  double elem_size = 1e-3;  ///< m
  double thickness = 1.0;   ///< m
  int cutout_x = 0;         ///< lbracket: width of the removed top-right block
  int cutout_y = 0;         ///< lbracket: height of the removed top-right block
  std::vector<std::string> mask;  ///< custom: one string per row, '#' active, '.' void

  bool operator==(const GeometrySpec&) const = default;
};

struct LoadSpec {
  std::vector<NodeCoord> nodes;
  double fx = 0.0;  ///< N per node
  double fy = 0.0;
  bool operator==(const LoadSpec&) const = default;
};

struct SupportSpec {
  std::vector<NodeCoord> nodes;
  bool fix_x = true;
  bool fix_y = true;
  bool operator==(const SupportSpec&) const = default;
};

struct StressSpec {
  bool enabled = true;
  int n_clusters = 1;
  int points_per_cluster = 0;
  double sigma1_tension = 0.0;      ///< Pa
  double sigma1_compression = 0.0;
  double sigma2_tension = 0.0;
  double sigma2_compression = 0.0;
  int exclusion_radius = 1;
  bool operator==(const StressSpec&) const = default;
};

struct MmaSpec {
  double move_rho = 0.2;
  double move_theta = 0.2;
  double asy_init = 0.5;
  double asy_incr = 1.2;
  double asy_decr = 0.7;
  double c = 1000.0;
  bool operator==(const MmaSpec&) const = default;
};

struct ProblemConfig {
  std::string name = "problem";
  GeometrySpec geometry;
  OrthotropicMaterial material;
  std::vector<LoadSpec> loads;
  std::vector<SupportSpec> supports;
  double volume_fraction = 0.25;
  double penalty = 3.0;
  int pnorm = 8;
  double filter_radius = 1.5;
  double rho_init = 1.0;
  double theta_init = -0.1;
  double tolerance = 1e-3;
  int max_iter = 8000;
  double density_floor = kDefaultDensityFloor;
  StressSpec stress;
  MmaSpec mma;
  std::string output_dir = "results";

  bool operator==(const ProblemConfig&) const = default;
};

/// Parse and validate; missing optional keys take the defaults above.
/// Errors are ConfigError with the offending key first in the message.
ProblemConfig parse_config(const std::string& json_text);
ProblemConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ProblemConfig& config);
void save_config(const ProblemConfig& config, const std::filesystem::path& path);

/// Structural checks that need no finite element model.
void validate_config(const ProblemConfig& config);

/// Active-cell mask for the configured geometry, row-major, row 0 on top.
std::vector<bool> geometry_mask(const GeometrySpec& geometry);

StructuredMesh build_mesh(const ProblemConfig& config);
BoundaryConditions build_boundary_conditions(const ProblemConfig& config,
                                             const StructuredMesh& mesh);
FeModel build_model(const ProblemConfig& config);
OptimizationSettings optimization_settings(const ProblemConfig& config);

/// Builds the model and runs the optimizer.
OptimizationResult run_problem(const ProblemConfig& config,
                               const IterationObserver& observer = {});

/// Element edge length (m) of the case-study presets, unit thickness. The
/// stiffness of a square element does not depend on its size, so compliance
/// and the optimized layout are unaffected while stresses scale as
/// 1 / (elem_size * thickness). The values place the unconstrained peak fibre
/// stresses at the level the stress limits of each case are meant to cut.
inline constexpr double kCantileverElemSize = 0.65;
inline constexpr double kLBracketElemSize = 18.0;

/// Built-in case studies:
///   1  cantilever, variants "constrained" (default) | "unconstrained"
///   2  L-bracket, one cluster per direction, variants "40" (default) | "80"
///   3  L-bracket, two clusters of 40 points per direction
///   4  cantilever P-value study, variants "4" | "6" | "8" (default) | "10"
ProblemConfig build_case_study(int id, const std::string& variant = "");

}  // namespace fibertopo
