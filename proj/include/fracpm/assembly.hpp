#pragma once

#include "fracpm/mesh.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <utility>
#include <vector>

namespace fracpm {

enum class MassMode { lumped, consistent };

std::string to_string(MassMode mode);

/// Mass and stiffness operators for L = -div(A grad .) on the P1 mesh,
/// together with the element geometry caches the kernels work from.
/// Immutable after assemble(); safe for unlimited concurrent reads.
struct AssembledOperators {
  Eigen::SparseMatrix<double> mass;         // per mass_mode
  Eigen::VectorXd lumped_mass;              // row sums, the nodal quadrature weights
  Eigen::SparseMatrix<double> stiffness_a;  // K_A
  Eigen::SparseMatrix<double> stiffness_i;  // K_I (coefficient = identity)
  std::vector<int> free_dofs;               // nodes not on Gamma0
  MassMode mass_mode = MassMode::lumped;
  int n_nodes = 0;
  int dimension = 1;

  double lambda1 = 0.0;  // ellipticity bounds of the coefficient field
  double lambda2 = 0.0;

  // Per-element caches: connectivity, volume, coefficient matrix, P1 basis
  // gradients and node -> (element, local vertex) adjacency in fixed order.
  Eigen::MatrixXi elements;
  Eigen::VectorXd element_volumes;
  std::vector<Eigen::Matrix2d> element_coeff;
  std::vector<std::array<Eigen::Vector2d, 3>> basis_gradients;
  std::vector<std::vector<std::pair<int, int>>> node_elements;

  std::vector<char> gamma0_mask;
};

/// Assembles mass and stiffness with exact element-wise quadrature for the
/// piecewise-constant sampled coefficients. Self-checks symmetry and the
/// Lambda1/Lambda2 ellipticity sandwich on random vectors before returning.
AssembledOperators assemble(const DiscreteDomain& domain, const CoefficientField& coeff,
                            MassMode mass_mode);

/// v' K_I v, the squared H^1_{Gamma0}-seminorm surrogate.
double gradient_energy(const AssembledOperators& ops, const Eigen::VectorXd& v);

/// v' K_A v.
double a_gradient_energy(const AssembledOperators& ops, const Eigen::VectorXd& v);

/// integral of v by the nodal quadrature (row-sum weights).
double integral(const AssembledOperators& ops, const Eigen::VectorXd& v);

/// sqrt(v' M v).
double l2_norm(const AssembledOperators& ops, const Eigen::VectorXd& v);

double l2_inner(const AssembledOperators& ops, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Debug dump: one "# name rows cols nnz" header per operator followed by
/// "i j value" triplet lines.
void dump_operators(const AssembledOperators& ops, std::ostream& out);

}  // namespace fracpm
