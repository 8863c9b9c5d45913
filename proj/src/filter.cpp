#include "fibertopo/filter.hpp"

#include <algorithm>
#include <cmath>

#include "fibertopo/errors.hpp"

namespace fibertopo {

FilterKernel FilterKernel::build(const StructuredMesh& mesh, double r_min) {
  if (!(r_min > 0.0)) throw ConfigError("filter_radius: must be positive");
  FilterKernel k;
  k.r_min_ = r_min;
  const int reach = static_cast<int>(std::ceil(r_min));
  const int n = mesh.num_elements();
  k.neighbors_.resize(n);
  k.weight_sum_.assign(n, 0.0);
  for (int e = 0; e < n; ++e) {
    const auto [row, col] = mesh.element_cell(e);
    for (int r = std::max(0, row - reach); r <= std::min(mesh.nely() - 1, row + reach); ++r) {
      for (int c = std::max(0, col - reach); c <= std::min(mesh.nelx() - 1, col + reach); ++c) {
        const int j = mesh.element_at(r, c);
        if (j < 0) continue;
        const double w = r_min - std::hypot(r - row, c - col);
        if (w > 0.0) {
          k.neighbors_[e].push_back({j, w});
          k.weight_sum_[e] += w;
        }
      }
    }
  }
  return k;
}

Eigen::VectorXd FilterKernel::apply(const Eigen::VectorXd& rho, const Eigen::VectorXd& grad) const {
  Eigen::VectorXd out(grad.size());
  for (int e = 0; e < size(); ++e) {
    double acc = 0.0;
    for (const auto& nb : neighbors_[e]) acc += nb.weight * rho[nb.element] * grad[nb.element];
    out[e] = acc / (std::max(kFilterGamma, rho[e]) * weight_sum_[e]);
  }
  return out;
}

}  // namespace fibertopo
