#include "fracpm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace fracpm {

std::string to_string(Side side) {
  switch (side) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
  }
  return "?";
}

Side side_from_string(const std::string& name) {
  if (name == "left") return Side::left;
  if (name == "right") return Side::right;
  if (name == "bottom") return Side::bottom;
  if (name == "top") return Side::top;
  throw std::invalid_argument("unknown boundary side '" + name + "'");
}

namespace {

void build_1d(DiscreteDomain& dom) {
  const int n = dom.resolution;
  dom.node_coords.resize(n + 1, 1);
  for (int i = 0; i <= n; ++i) dom.node_coords(i, 0) = static_cast<double>(i) / n;
  dom.elements.resize(n, 2);
  for (int e = 0; e < n; ++e) {
    dom.elements(e, 0) = e;
    dom.elements(e, 1) = e + 1;
  }
}

void build_2d(DiscreteDomain& dom) {
  const int n = dom.resolution;
  const int stride = n + 1;
  dom.node_coords.resize(stride * stride, 2);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const int id = i + j * stride;
      dom.node_coords(id, 0) = static_cast<double>(i) / n;
      dom.node_coords(id, 1) = static_cast<double>(j) / n;
    }
  // Each cell (i,j) splits along the p00-p11 diagonal into two CCW triangles.
  dom.elements.resize(2 * n * n, 3);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int p00 = i + j * stride;
      const int p10 = (i + 1) + j * stride;
      const int p01 = i + (j + 1) * stride;
      const int p11 = (i + 1) + (j + 1) * stride;
      const int e = 2 * (j * n + i);
      dom.elements(e, 0) = p00;
      dom.elements(e, 1) = p10;
      dom.elements(e, 2) = p11;
      dom.elements(e + 1, 0) = p00;
      dom.elements(e + 1, 1) = p11;
      dom.elements(e + 1, 2) = p01;
    }
}

int node_id(const DiscreteDomain& dom, int i, int j) {
  return i + j * (dom.resolution + 1);
}

int lower_triangle(const DiscreteDomain& dom, int ci, int cj) {
  return 2 * (cj * dom.resolution + ci);
}

int upper_triangle(const DiscreteDomain& dom, int ci, int cj) {
  return 2 * (cj * dom.resolution + ci) + 1;
}

// Facets of one full boundary side at inward offset `layer` (0 = on the side).
std::vector<Facet> side_facets(const DiscreteDomain& dom, Side side, int layer) {
  const int n = dom.resolution;
  std::vector<Facet> facets;
  if (dom.dimension == 1) {
    Facet f;
    f.measure = 1.0;
    f.side = side;
    if (side == Side::left) {
      f.nodes = {layer, -1};
      f.normal = {-1.0, 0.0};
      f.adjacent_element = layer;
    } else {
      f.nodes = {n - layer, -1};
      f.normal = {1.0, 0.0};
      f.adjacent_element = n - layer - 1;
    }
    facets.push_back(f);
    return facets;
  }
  const double h = dom.mesh_width();
  for (int k = 0; k < n; ++k) {
    Facet f;
    f.measure = h;
    f.side = side;
    switch (side) {
      case Side::left:
        f.nodes = {node_id(dom, layer, k), node_id(dom, layer, k + 1)};
        f.normal = {-1.0, 0.0};
        f.adjacent_element = upper_triangle(dom, layer, k);
        break;
      case Side::right:
        f.nodes = {node_id(dom, n - layer, k), node_id(dom, n - layer, k + 1)};
        f.normal = {1.0, 0.0};
        f.adjacent_element = lower_triangle(dom, n - layer - 1, k);
        break;
      case Side::bottom:
        f.nodes = {node_id(dom, k, layer), node_id(dom, k + 1, layer)};
        f.normal = {0.0, -1.0};
        f.adjacent_element = lower_triangle(dom, k, layer);
        break;
      case Side::top:
        f.nodes = {node_id(dom, k, n - layer), node_id(dom, k + 1, n - layer)};
        f.normal = {0.0, 1.0};
        f.adjacent_element = upper_triangle(dom, k, n - layer - 1);
        break;
    }
    facets.push_back(f);
  }
  return facets;
}

std::vector<int> side_nodes(const DiscreteDomain& dom, Side side) {
  const int n = dom.resolution;
  std::vector<int> nodes;
  if (dom.dimension == 1) {
    nodes.push_back(side == Side::left ? 0 : n);
    return nodes;
  }
  for (int k = 0; k <= n; ++k) {
    switch (side) {
      case Side::left: nodes.push_back(node_id(dom, 0, k)); break;
      case Side::right: nodes.push_back(node_id(dom, n, k)); break;
      case Side::bottom: nodes.push_back(node_id(dom, k, 0)); break;
      case Side::top: nodes.push_back(node_id(dom, k, n)); break;
    }
  }
  return nodes;
}

std::vector<Side> all_sides(int dimension) {
  if (dimension == 1) return {Side::left, Side::right};
  return {Side::left, Side::right, Side::bottom, Side::top};
}

}  // namespace

DiscreteDomain build_domain(int dimension, int resolution, const std::vector<Side>& gamma0_spec) {
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("dimension must be 1 or 2");
  if (resolution < 4)
    throw std::invalid_argument("resolution must be at least 4");
  if (gamma0_spec.empty())
    throw std::invalid_argument("gamma0 is empty: at least one Dirichlet side is required");
  for (Side s : gamma0_spec)
    if (dimension == 1 && (s == Side::bottom || s == Side::top))
      throw std::invalid_argument("1D domains only have left/right boundary pieces");

  DiscreteDomain dom;
  dom.dimension = dimension;
  dom.resolution = resolution;
  if (dimension == 1)
    build_1d(dom);
  else
    build_2d(dom);

  std::set<Side> g0(gamma0_spec.begin(), gamma0_spec.end());
  dom.gamma0_sides.assign(g0.begin(), g0.end());

  std::set<int> g0_nodes, boundary_nodes;
  for (Side s : all_sides(dimension)) {
    auto nodes = side_nodes(dom, s);
    boundary_nodes.insert(nodes.begin(), nodes.end());
    if (g0.count(s)) g0_nodes.insert(nodes.begin(), nodes.end());
    auto facets = side_facets(dom, s, 0);
    auto& bucket = g0.count(s) ? dom.gamma0_facets : dom.gamma1_facets;
    bucket.insert(bucket.end(), facets.begin(), facets.end());
  }
  dom.gamma0_nodes.assign(g0_nodes.begin(), g0_nodes.end());
  for (int nd : boundary_nodes)
    if (!g0_nodes.count(nd)) dom.gamma1_nodes.push_back(nd);

  dom.gamma0_mask.assign(static_cast<size_t>(dom.node_count()), 0);
  for (int nd : dom.gamma0_nodes) dom.gamma0_mask[static_cast<size_t>(nd)] = 1;

  dom.h_values.resize(dom.node_count());
  for (int i = 0; i < dom.node_count(); ++i) {
    const double x = dom.node_coords(i, 0);
    double h = std::min(x, 1.0 - x);
    if (dimension == 2) {
      const double y = dom.node_coords(i, 1);
      h = std::min({h, y, 1.0 - y});
    }
    dom.h_values(i) = h;
  }
  return dom;
}

CoefficientField build_coefficients(const DiscreteDomain& domain, const CoefficientFn& fn) {
  CoefficientField field;
  const int n_elem = domain.element_count();
  field.element_matrices.resize(static_cast<size_t>(n_elem));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const int nv = domain.dimension + 1;
  for (int e = 0; e < n_elem; ++e) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int v = 0; v < nv; ++v)
      for (int d = 0; d < domain.dimension; ++d)
        centroid(d) += domain.node_coords(domain.elements(e, v), d) / nv;
    Eigen::Matrix2d a = fn(centroid);
    double emin, emax;
    if (domain.dimension == 1) {
      emin = emax = a(0, 0);
    } else {
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      if (std::abs(a(0, 1) - a(1, 0)) > 1e-12 * scale)
        throw std::invalid_argument("coefficient matrix is not symmetric at element " +
                                    std::to_string(e));
      a(1, 0) = a(0, 1);
      const double tr = a(0, 0) + a(1, 1);
      const double disc = std::sqrt(std::pow(a(0, 0) - a(1, 1), 2) / 4.0 + a(0, 1) * a(0, 1));
      emin = tr / 2.0 - disc;
      emax = tr / 2.0 + disc;
    }
    if (!(emin > 0.0))
      throw std::invalid_argument("coefficient matrix not elliptic at element " +
                                  std::to_string(e));
    field.element_matrices[static_cast<size_t>(e)] = a;
    lo = std::min(lo, emin);
    hi = std::max(hi, emax);
  }
  field.lambda1 = lo;
  field.lambda2 = hi;
  return field;
}

CoefficientFn identity_coefficient() {
  return [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity(); };
}

ShellFamily build_shells(const DiscreteDomain& domain, int n_shells) {
  if (n_shells < 2) throw std::invalid_argument("n_shells must be at least 2");
  const int max_layers = domain.resolution / 2;
  if (n_shells - 1 > max_layers)
    throw std::invalid_argument("n_shells exceeds the interior layers available next to Gamma1");
  if (domain.gamma1_facets.empty())
    throw std::invalid_argument("domain has no Gamma1 facets");

  std::set<Side> g1_sides;
  for (const auto& f : domain.gamma1_facets) g1_sides.insert(f.side);

  ShellFamily shells;
  const double h = domain.mesh_width();
  for (int k = 0; k < n_shells; ++k) {
    shells.tau_values.push_back(k * h);
    std::vector<Facet> layer;
    for (Side s : g1_sides) {
      auto facets = side_facets(domain, s, k);
      layer.insert(layer.end(), facets.begin(), facets.end());
    }
    shells.shells.push_back(std::move(layer));
  }
  return shells;
}

}  // namespace fracpm
