#include "fibertopo/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace fibertopo {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ExportError("cannot write " + path.string());
  return out;
}

struct Rgb {
  unsigned char r, g, b;
};

constexpr Rgb kInactive{160, 160, 160};

void write_ppm(const std::filesystem::path& path, const Eigen::MatrixXd& grid, int scale,
               const auto& color) {
  if (scale < 1) throw ExportError("image scale must be positive");
  const int h = static_cast<int>(grid.rows()) * scale;
  const int w = static_cast<int>(grid.cols()) * scale;
  std::vector<unsigned char> pixels(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = grid(y / scale, x / scale);
      const Rgb c = std::isnan(v) ? kInactive : color(v);
      const size_t k = (static_cast<size_t>(y) * w + x) * 3;
      pixels[k] = c.r;
      pixels[k + 1] = c.g;
      pixels[k + 2] = c.b;
    }
  }
  auto out = open_out(path, true);
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw ExportError("failed writing " + path.string());
}

unsigned char channel(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Eigen::MatrixXd element_grid(const StructuredMesh& mesh, const Eigen::VectorXd& values) {
  if (values.size() != mesh.num_elements()) {
    throw ExportError("field size does not match the element count");
  }
  Eigen::MatrixXd grid =
      Eigen::MatrixXd::Constant(mesh.nely(), mesh.nelx(), std::numeric_limits<double>::quiet_NaN());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto [r, c] = mesh.element_cell(e);
    grid(r, c) = values[e];
  }
  return grid;
}

Eigen::VectorXd grid_values(const StructuredMesh& mesh, const Eigen::MatrixXd& grid) {
  if (grid.rows() != mesh.nely() || grid.cols() != mesh.nelx()) {
    throw ExportError("grid shape does not match the mesh");
  }
  Eigen::VectorXd v(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto [r, c] = mesh.element_cell(e);
    v[e] = grid(r, c);
  }
  return v;
}

void write_grid_csv(const std::filesystem::path& path, const Eigen::MatrixXd& grid) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      if (c) out << ',';
      out << format_double(grid(r, c));
    }
    out << '\n';
  }
  if (!out) throw ExportError("failed writing " + path.string());
}

Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExportError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ExportError("bad number '" + cell + "' in " + path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ExportError("ragged rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd grid(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) grid(r, c) = rows[r][c];
  }
  return grid;
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<IterationRecord>& history) {
  auto out = open_out(path);
  out << kConvergenceHeader << '\n';
  for (const auto& rec : history) {
    out << rec.iter << ',' << format_double(rec.compliance);
    for (double g : rec.g) out << ',' << (std::isnan(g) ? "" : format_double(g));
    out << ',' << format_double(rec.volume) << ',' << format_double(rec.max_sigma1) << ','
        << format_double(rec.max_sigma2) << '\n';
  }
  if (!out) throw ExportError("failed writing " + path.string());
}

void write_density_ppm(const std::filesystem::path& path, const Eigen::MatrixXd& grid,
                       int scale) {
  write_ppm(path, grid, scale, [](double v) {
    const unsigned char k = channel(1.0 - v);
    return Rgb{k, k, k};
  });
}

void write_diverging_ppm(const std::filesystem::path& path, const Eigen::MatrixXd& grid,
                         int scale) {
  double vmax = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!std::isnan(grid.data()[i])) vmax = std::max(vmax, std::abs(grid.data()[i]));
  }
  write_ppm(path, grid, scale, [vmax](double v) {
    const double t = vmax > 0.0 ? std::clamp(v / vmax, -1.0, 1.0) : 0.0;
    if (t >= 0.0) return Rgb{255, channel(1.0 - t), channel(1.0 - t)};
    return Rgb{channel(1.0 + t), channel(1.0 + t), 255};
  });
}

std::string summary_json(const OptimizationResult& result, const std::string& name) {
  nlohmann::json j;
  j["name"] = name;
  j["status"] = result.status == TerminationStatus::Converged ? "converged" : "max_iterations";
  j["iterations"] = result.iterations;
  j["compliance"] = result.compliance;
  j["volume"] = result.volume;
  j["max_sigma1"] = result.report.max_sigma1;
  j["max_sigma2"] = result.report.max_sigma2;
  j["pnorm"] = result.final_pnorm;
  j["excluded_load_zone"] = result.load_zone.size();
  j["excluded_support_corners"] = result.support_corners.size();
  return j.dump(2) + "\n";
}

void export_fields(const OptimizationResult& result, const StructuredMesh& mesh,
                   const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create " + dir.string() + ": " + ec.message());

  const Eigen::MatrixXd density = element_grid(mesh, result.design.rho);
  const Eigen::MatrixXd theta = element_grid(mesh, result.design.theta);
  const Eigen::MatrixXd sigma1 = element_grid(mesh, result.stress.sigma1);
  const Eigen::MatrixXd sigma2 = element_grid(mesh, result.stress.sigma2);
  write_grid_csv(dir / "density.csv", density);
  write_grid_csv(dir / "theta.csv", theta);
  write_grid_csv(dir / "sigma1.csv", sigma1);
  write_grid_csv(dir / "sigma2.csv", sigma2);
  write_convergence_csv(dir / "convergence.csv", result.history);
  write_density_ppm(dir / "density.ppm", density);
  write_diverging_ppm(dir / "sigma1.ppm", sigma1);
  write_diverging_ppm(dir / "sigma2.ppm", sigma2);
  auto out = open_out(dir / "summary.json");
  out << summary_json(result, name);
}

}  // namespace fibertopo
