// Structured Q4 grid with an active-cell mask.
//
// Cells are addressed (row, col) with row 0 at the top of the domain; nodes
// live on the (nely+1) x (nelx+1) grid with the same orientation. Physical
// coordinates have x to the right and y upward, so node (row, col) sits at
// (col * a, (nely - row) * a). Only nodes touched by an active cell are
// numbered, each carrying dofs 2n (x) and 2n+1 (y).
#pragma once

#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fibertopo {

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct NodeCoord {
  int row = 0;
  int col = 0;
  bool operator==(const NodeCoord&) const = default;
};

class StructuredMesh {
public:
  StructuredMesh() = default;

  static StructuredMesh rectangle(int nelx, int nely, double elem_size, double thickness);

  /// `active` is row-major over cells, row 0 at the top.
  static StructuredMesh from_mask(int nelx, int nely, std::vector<bool> active,
                                  double elem_size, double thickness);

  int nelx() const { return nelx_; }
  int nely() const { return nely_; }
  double elem_size() const { return elem_size_; }
  double thickness() const { return thickness_; }

  int num_elements() const { return static_cast<int>(elem_cell_.size()); }
  int num_nodes() const { return num_nodes_; }
  int num_dofs() const { return 2 * num_nodes_; }

  bool cell_active(int row, int col) const;
  /// Active element index of a cell, or -1.
  int element_at(int row, int col) const;
  std::pair<int, int> element_cell(int e) const;

  /// Node id at a grid point, or -1 when no active cell touches it.
  int node_at(int row, int col) const;
  int node_at(NodeCoord c) const { return node_at(c.row, c.col); }
  NodeCoord node_coord(int node) const { return node_coord_[node]; }

  /// Counter-clockwise from the bottom-left corner.
  const std::array<int, 4>& element_nodes(int e) const { return elem_nodes_[e]; }
  const std::array<int, 8>& element_dofs(int e) const { return elem_dofs_[e]; }

  /// Centroid in element-size units.
  Eigen::Vector2d element_center(int e) const;

  /// Active elements sharing an edge with e, in ascending index order.
  std::vector<int> edge_neighbors(int e) const;

  const std::vector<bool>& mask() const { return active_; }

private:
  void build();

  int nelx_ = 0;
  int nely_ = 0;
  double elem_size_ = 1.0;
  double thickness_ = 1.0;
  std::vector<bool> active_;
  std::vector<int> cell_elem_;
  std::vector<std::pair<int, int>> elem_cell_;
  std::vector<int> grid_node_;
  std::vector<NodeCoord> node_coord_;
  int num_nodes_ = 0;
  std::vector<std::array<int, 4>> elem_nodes_;
  std::vector<std::array<int, 8>> elem_dofs_;
};

struct BoundaryConditions {
  std::vector<int> fixed_dofs;                 ///< sorted, unique
  std::vector<std::pair<int, double>> loads;   ///< (dof, force in N)

  Eigen::VectorXd force_vector(int num_dofs) const;

  /// Fixed and loaded dofs must be disjoint, in range, and at least three
  /// dofs must be fixed.
  void validate(const StructuredMesh& mesh) const;

  /// Nodes that carry a non-zero load.
  std::vector<int> loaded_nodes() const;
};

struct DesignState {
  Eigen::VectorXd rho;
  Eigen::VectorXd theta;

  static DesignState uniform(int n, double rho, double theta);
  void validate(int num_elements) const;
};

}  // namespace fibertopo
