#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace fracpm {

/// Axis-aligned boundary pieces of the unit interval / unit square.
enum class Side { left, right, bottom, top };

std::string to_string(Side side);
Side side_from_string(const std::string& name);

/// One boundary (or interior shell) facet: a node in 1D, an edge in 2D.
struct Facet {
  std::array<int, 2> nodes{-1, -1};  // 1D: nodes[1] == -1
  Eigen::Vector2d normal{0.0, 0.0};  // unit outward normal of the parent side
  double measure = 0.0;              // 1 in 1D, edge length in 2D
  Side side = Side::left;
  int adjacent_element = -1;         // interior-side element
};

/// Structured P1 mesh of (0,1) or (0,1)^2 with a Gamma0/Gamma1 boundary split
/// and a distance-to-boundary level set h.
struct DiscreteDomain {
  int dimension = 1;
  int resolution = 0;  // cells per axis
  Eigen::MatrixXd node_coords;  // n_nodes x dimension
  Eigen::MatrixXi elements;     // n_elem x (dimension + 1)
  std::vector<int> gamma0_nodes;  // sorted, disjoint from gamma1_nodes
  std::vector<int> gamma1_nodes;  // sorted
  std::vector<Facet> gamma0_facets;
  std::vector<Facet> gamma1_facets;
  std::vector<char> gamma0_mask;  // per node
  Eigen::VectorXd h_values;       // distance to the full boundary, 0 exactly on it
  std::vector<Side> gamma0_sides;

  int node_count() const { return static_cast<int>(node_coords.rows()); }
  int element_count() const { return static_cast<int>(elements.rows()); }
  bool is_gamma0(int node) const { return gamma0_mask[static_cast<size_t>(node)] != 0; }
  double mesh_width() const { return 1.0 / resolution; }
};

/// Builds the structured domain. gamma0_spec must be a nonempty subset of
/// {left, right} in 1D or {left, right, bottom, top} in 2D; corner nodes are
/// assigned to Gamma0. Throws std::invalid_argument on violated preconditions.
DiscreteDomain build_domain(int dimension, int resolution, const std::vector<Side>& gamma0_spec);

/// Closed-form coefficient callback sampled at element centroids. 1D reads
/// only the (0,0) entry.
using CoefficientFn = std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>;

/// Symmetric per-element coefficient matrices with ellipticity bounds
/// lambda1 = min element eigenvalue, lambda2 = max element eigenvalue.
struct CoefficientField {
  std::vector<Eigen::Matrix2d> element_matrices;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Samples `fn` at element centroids. Throws if any sampled matrix is
/// asymmetric or has an eigenvalue <= 0.
CoefficientField build_coefficients(const DiscreteDomain& domain, const CoefficientFn& fn);

CoefficientFn identity_coefficient();

/// Family of inward normal-offset shells of Gamma1. shells[k] sits at depth
/// tau_values[k] = k * mesh_width, shells[0] coincides with the Gamma1 facets.
struct ShellFamily {
  std::vector<double> tau_values;
  std::vector<std::vector<Facet>> shells;
};

/// Builds n_shells nested shells (counting the tau = 0 one). Throws when the
/// mesh does not have that many interior layers next to Gamma1.
ShellFamily build_shells(const DiscreteDomain& domain, int n_shells);

}  // namespace fracpm
