#include "fracpm/assembly.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

namespace fracpm {

std::string to_string(MassMode mode) {
  return mode == MassMode::lumped ? "lumped" : "consistent";
}

namespace {

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

struct ElementGeometry {
  double volume = 0.0;
  std::array<Eigen::Vector2d, 3> grads{};  // P1 basis gradients, constant per element
};

ElementGeometry element_geometry(const DiscreteDomain& dom, int e) {
  ElementGeometry g;
  if (dom.dimension == 1) {
    const double x0 = dom.node_coords(dom.elements(e, 0), 0);
    const double x1 = dom.node_coords(dom.elements(e, 1), 0);
    g.volume = x1 - x0;
    g.grads[0] = {-1.0 / g.volume, 0.0};
    g.grads[1] = {1.0 / g.volume, 0.0};
    return g;
  }
  Eigen::Vector2d p[3];
  for (int v = 0; v < 3; ++v)
    p[v] = dom.node_coords.row(dom.elements(e, v)).head<2>();
  const Eigen::Vector2d d1 = p[1] - p[0], d2 = p[2] - p[0];
  const double twice_area = d1.x() * d2.y() - d1.y() * d2.x();
  g.volume = 0.5 * twice_area;
  g.grads[0] = perp(p[2] - p[1]) / twice_area;
  g.grads[1] = perp(p[0] - p[2]) / twice_area;
  g.grads[2] = perp(p[1] - p[0]) / twice_area;
  return g;
}

}  // namespace

AssembledOperators assemble(const DiscreteDomain& domain, const CoefficientField& coeff,
                            MassMode mass_mode) {
  const int n = domain.node_count();
  const int n_elem = domain.element_count();
  const int nv = domain.dimension + 1;
  if (static_cast<int>(coeff.element_matrices.size()) != n_elem)
    throw std::invalid_argument("coefficient field does not match the mesh");

  AssembledOperators ops;
  ops.mass_mode = mass_mode;
  ops.n_nodes = n;
  ops.dimension = domain.dimension;
  ops.lambda1 = coeff.lambda1;
  ops.lambda2 = coeff.lambda2;
  ops.gamma0_mask = domain.gamma0_mask;
  ops.elements = domain.elements;
  ops.element_coeff = coeff.element_matrices;
  ops.element_volumes.resize(n_elem);
  ops.basis_gradients.resize(static_cast<size_t>(n_elem));

  using T = Eigen::Triplet<double>;
  const int per_elem = nv * nv;
  std::vector<T> trip_a(static_cast<size_t>(n_elem) * per_elem);
  std::vector<T> trip_i(static_cast<size_t>(n_elem) * per_elem);
  std::vector<T> trip_m(static_cast<size_t>(n_elem) * per_elem);

  int bad_element = -1;
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n_elem; ++e) {
    const ElementGeometry g = element_geometry(domain, e);
    if (!(g.volume > 0.0)) {
#pragma omp atomic write
      bad_element = e;
      continue;
    }
    ops.element_volumes(e) = g.volume;
    ops.basis_gradients[static_cast<size_t>(e)] = g.grads;
    const Eigen::Matrix2d& a = coeff.element_matrices[static_cast<size_t>(e)];

    double ka[3][3], ki[3][3], me[3][3];
    for (int m = 0; m < nv; ++m)
      for (int c = m; c < nv; ++c) {
        double va, vi;
        if (domain.dimension == 1) {
          va = g.volume * a(0, 0) * g.grads[m].x() * g.grads[c].x();
          vi = g.volume * g.grads[m].x() * g.grads[c].x();
        } else {
          va = g.volume * g.grads[m].dot(a * g.grads[c]);
          vi = g.volume * g.grads[m].dot(g.grads[c]);
        }
        ka[m][c] = ka[c][m] = va;
        ki[m][c] = ki[c][m] = vi;
        double vm;
        if (mass_mode == MassMode::lumped)
          vm = (m == c) ? g.volume / nv : 0.0;
        else
          vm = g.volume * ((m == c ? 2.0 : 1.0) / (domain.dimension == 1 ? 6.0 : 12.0));
        me[m][c] = me[c][m] = vm;
      }

    const size_t base = static_cast<size_t>(e) * per_elem;
    size_t slot = base;
    for (int m = 0; m < nv; ++m)
      for (int c = 0; c < nv; ++c, ++slot) {
        const int gi = domain.elements(e, m);
        const int gj = domain.elements(e, c);
        trip_a[slot] = T(gi, gj, ka[m][c]);
        trip_i[slot] = T(gi, gj, ki[m][c]);
        trip_m[slot] = T(gi, gj, me[m][c]);
      }
  }

  if (bad_element >= 0)
    throw std::runtime_error("nonpositive element volume at element " +
                             std::to_string(bad_element));

  ops.stiffness_a.resize(n, n);
  ops.stiffness_a.setFromTriplets(trip_a.begin(), trip_a.end());
  ops.stiffness_i.resize(n, n);
  ops.stiffness_i.setFromTriplets(trip_i.begin(), trip_i.end());
  ops.mass.resize(n, n);
  ops.mass.setFromTriplets(trip_m.begin(), trip_m.end());
  ops.mass.prune(0.0);

  ops.lumped_mass = ops.mass * Eigen::VectorXd::Ones(n);
  if (mass_mode == MassMode::lumped) {
    // rebuild as exactly diagonal
    std::vector<T> diag;
    diag.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) diag.emplace_back(i, i, ops.lumped_mass(i));
    ops.mass.setZero();
    ops.mass.setFromTriplets(diag.begin(), diag.end());
  }

  for (int i = 0; i < n; ++i)
    if (!domain.is_gamma0(i)) ops.free_dofs.push_back(i);
  if (static_cast<int>(ops.free_dofs.size()) == n)
    throw std::invalid_argument("empty Gamma0 leaves the restricted stiffness singular");

  ops.node_elements.resize(static_cast<size_t>(n));
  for (int e = 0; e < n_elem; ++e)
    for (int v = 0; v < nv; ++v)
      ops.node_elements[static_cast<size_t>(domain.elements(e, v))].emplace_back(e, v);

  // ellipticity sandwich self-check
  std::mt19937_64 rng(0x5eedu);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = unif(rng);
    const double qa = v.dot(ops.stiffness_a * v);
    const double qi = v.dot(ops.stiffness_i * v);
    const double slack = 1e-12 * std::max(1.0, std::abs(qa));
    if (qa < ops.lambda1 * qi - slack || qa > ops.lambda2 * qi + slack)
      throw std::runtime_error("assembled stiffness violates the ellipticity sandwich");
  }
  return ops;
}

double gradient_energy(const AssembledOperators& ops, const Eigen::VectorXd& v) {
  return v.dot(ops.stiffness_i * v);
}

double a_gradient_energy(const AssembledOperators& ops, const Eigen::VectorXd& v) {
  return v.dot(ops.stiffness_a * v);
}

double integral(const AssembledOperators& ops, const Eigen::VectorXd& v) {
  return ops.lumped_mass.dot(v);
}

double l2_norm(const AssembledOperators& ops, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, v.dot(ops.mass * v)));
}

double l2_inner(const AssembledOperators& ops, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return u.dot(ops.mass * v);
}

namespace {
void dump_one(std::ostream& out, const char* name, const Eigen::SparseMatrix<double>& m) {
  out << "# " << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[64];
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()),
                    static_cast<int>(it.col()), it.value());
      out << buf;
    }
}
}  // namespace

void dump_operators(const AssembledOperators& ops, std::ostream& out) {
  dump_one(out, "mass", ops.mass);
  dump_one(out, "stiffness_a", ops.stiffness_a);
  dump_one(out, "stiffness_i", ops.stiffness_i);
}

}  // namespace fracpm
