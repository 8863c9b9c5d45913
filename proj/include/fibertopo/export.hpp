// Result export: element grids as CSV, convergence history, PPM images and a
// JSON summary.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fibertopo/mesh.hpp"
#include "fibertopo/optimizer.hpp"

namespace fibertopo {

class ExportError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// nely x nelx grid of per-element values, row 0 on top, NaN where inactive.
Eigen::MatrixXd element_grid(const StructuredMesh& mesh, const Eigen::VectorXd& values);

/// Inverse of element_grid for the active cells.
Eigen::VectorXd grid_values(const StructuredMesh& mesh, const Eigen::MatrixXd& grid);

/// Comma-separated rows, values printed with 17 significant digits so the
/// file reads back bit-identical; inactive cells are written as "nan".
void write_grid_csv(const std::filesystem::path& path, const Eigen::MatrixXd& grid);
Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path);

inline constexpr const char* kConvergenceHeader =
    "iter,compliance,g1,g2,g3,g4,volume,max_sigma1,max_sigma2";

/// One row per iteration; g1..g4 are the normalized stress constraints in
/// the order (s1 c1, s2 c1, s1 c2, s2 c2), empty when absent.
void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<IterationRecord>& history);

/// Binary PPM (P6); each element becomes a `scale` x `scale` block.
/// Density: white (0) to black (1). Stress: blue-white-red on a symmetric
/// scale of +-max|value| over the active cells. Inactive cells are grey.
void write_density_ppm(const std::filesystem::path& path, const Eigen::MatrixXd& grid,
                       int scale = 8);
void write_diverging_ppm(const std::filesystem::path& path, const Eigen::MatrixXd& grid,
                         int scale = 8);

std::string summary_json(const OptimizationResult& result, const std::string& name);

/// Writes density, theta, sigma1 and sigma2 (CSV and PPM), convergence.csv
/// and summary.json into `dir`, creating it if needed.
void export_fields(const OptimizationResult& result, const StructuredMesh& mesh,
                   const std::filesystem::path& dir, const std::string& name = "problem");

}  // namespace fibertopo
