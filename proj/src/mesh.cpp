#include "fibertopo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

namespace fibertopo {

StructuredMesh StructuredMesh::rectangle(int nelx, int nely, double elem_size, double thickness) {
  return from_mask(nelx, nely, std::vector<bool>(static_cast<size_t>(nelx) * nely, true),
                   elem_size, thickness);
}

StructuredMesh StructuredMesh::from_mask(int nelx, int nely, std::vector<bool> active,
                                         double elem_size, double thickness) {
  if (nelx <= 0 || nely <= 0) {
    throw MeshError("mesh: nelx and nely must be positive");
  }
  if (active.size() != static_cast<size_t>(nelx) * nely) {
    throw MeshError("mesh: mask size does not match nelx*nely");
  }
  if (!(elem_size > 0.0) || !(thickness > 0.0)) {
    throw MeshError("mesh: elem_size and thickness must be positive");
  }
  StructuredMesh m;
  m.nelx_ = nelx;
  m.nely_ = nely;
  m.elem_size_ = elem_size;
  m.thickness_ = thickness;
  m.active_ = std::move(active);
  m.build();
  return m;
}

void StructuredMesh::build() {
  const int ncell = nelx_ * nely_;
  cell_elem_.assign(ncell, -1);
  elem_cell_.clear();
  for (int r = 0; r < nely_; ++r) {
    for (int c = 0; c < nelx_; ++c) {
      if (active_[r * nelx_ + c]) {
        cell_elem_[r * nelx_ + c] = static_cast<int>(elem_cell_.size());
        elem_cell_.emplace_back(r, c);
      }
    }
  }
  if (elem_cell_.empty()) {
    throw MeshError("mesh: no active cells");
  }

  // Single edge-connected component.
  std::vector<bool> seen(elem_cell_.size(), false);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = true;
  size_t reached = 1;
  while (!todo.empty()) {
    const int e = todo.front();
    todo.pop();
    for (int n : edge_neighbors(e)) {
      if (!seen[n]) {
        seen[n] = true;
        ++reached;
        todo.push(n);
      }
    }
  }
  if (reached != elem_cell_.size()) {
    throw MeshError("mesh: active region is not connected");
  }

  const int ngrid = (nelx_ + 1) * (nely_ + 1);
  std::vector<bool> used(ngrid, false);
  for (auto [r, c] : elem_cell_) {
    used[r * (nelx_ + 1) + c] = true;
    used[r * (nelx_ + 1) + c + 1] = true;
    used[(r + 1) * (nelx_ + 1) + c] = true;
    used[(r + 1) * (nelx_ + 1) + c + 1] = true;
  }
  grid_node_.assign(ngrid, -1);
  node_coord_.clear();
  num_nodes_ = 0;
  for (int r = 0; r <= nely_; ++r) {
    for (int c = 0; c <= nelx_; ++c) {
      if (used[r * (nelx_ + 1) + c]) {
        grid_node_[r * (nelx_ + 1) + c] = num_nodes_++;
        node_coord_.push_back({r, c});
      }
    }
  }

  elem_nodes_.resize(elem_cell_.size());
  elem_dofs_.resize(elem_cell_.size());
  for (size_t e = 0; e < elem_cell_.size(); ++e) {
    const auto [r, c] = elem_cell_[e];
    elem_nodes_[e] = {node_at(r + 1, c), node_at(r + 1, c + 1), node_at(r, c + 1), node_at(r, c)};
    for (int k = 0; k < 4; ++k) {
      elem_dofs_[e][2 * k] = 2 * elem_nodes_[e][k];
      elem_dofs_[e][2 * k + 1] = 2 * elem_nodes_[e][k] + 1;
    }
  }
}

bool StructuredMesh::cell_active(int row, int col) const {
  if (row < 0 || row >= nely_ || col < 0 || col >= nelx_) return false;
  return active_[row * nelx_ + col];
}

int StructuredMesh::element_at(int row, int col) const {
  if (row < 0 || row >= nely_ || col < 0 || col >= nelx_) return -1;
  return cell_elem_[row * nelx_ + col];
}

std::pair<int, int> StructuredMesh::element_cell(int e) const {
  return elem_cell_[e];
}

int StructuredMesh::node_at(int row, int col) const {
  if (row < 0 || row > nely_ || col < 0 || col > nelx_) return -1;
  return grid_node_[row * (nelx_ + 1) + col];
}

Eigen::Vector2d StructuredMesh::element_center(int e) const {
  const auto [r, c] = elem_cell_[e];
  return {c + 0.5, (nely_ - r) - 0.5};
}

std::vector<int> StructuredMesh::edge_neighbors(int e) const {
  const auto [r, c] = elem_cell_[e];
  std::vector<int> out;
  for (auto [dr, dc] : {std::pair{-1, 0}, {0, -1}, {0, 1}, {1, 0}}) {
    const int n = element_at(r + dr, c + dc);
    if (n >= 0) out.push_back(n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd BoundaryConditions::force_vector(int num_dofs) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_dofs);
  for (auto [dof, value] : loads) f[dof] += value;
  return f;
}

void BoundaryConditions::validate(const StructuredMesh& mesh) const {
  if (fixed_dofs.size() < 3) {
    throw MeshError("supports: at least 3 dofs must be fixed");
  }
  if (!std::is_sorted(fixed_dofs.begin(), fixed_dofs.end()) ||
      std::adjacent_find(fixed_dofs.begin(), fixed_dofs.end()) != fixed_dofs.end()) {
    throw MeshError("supports: fixed dofs must be sorted and unique");
  }
  for (int d : fixed_dofs) {
    if (d < 0 || d >= mesh.num_dofs()) throw MeshError("supports: dof out of range");
  }
  for (auto [d, value] : loads) {
    if (d < 0 || d >= mesh.num_dofs()) throw MeshError("loads: dof out of range");
    if (!std::isfinite(value)) throw MeshError("loads: non-finite force");
    if (std::binary_search(fixed_dofs.begin(), fixed_dofs.end(), d)) {
      throw MeshError("loads: dof " + std::to_string(d) + " is also fixed");
    }
  }
}

std::vector<int> BoundaryConditions::loaded_nodes() const {
  std::vector<int> nodes;
  for (auto [d, value] : loads) {
    if (value != 0.0) nodes.push_back(d / 2);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

DesignState DesignState::uniform(int n, double rho, double theta) {
  return {Eigen::VectorXd::Constant(n, rho), Eigen::VectorXd::Constant(n, theta)};
}

void DesignState::validate(int num_elements) const {
  if (rho.size() != num_elements || theta.size() != num_elements) {
    throw MeshError("design: field length does not match active element count");
  }
  for (int e = 0; e < num_elements; ++e) {
    if (!(rho[e] >= 0.0 && rho[e] <= 1.0)) throw MeshError("design: rho outside [0, 1]");
    if (!(std::abs(theta[e]) <= std::numbers::pi)) {
      throw MeshError("design: theta outside [-pi, pi]");
    }
  }
}

}  // namespace fibertopo
