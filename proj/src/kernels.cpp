#include "fracpm/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace fracpm::kernels {

namespace {
constexpr int kBlock = 64;
}

Eigen::VectorXd spectral_analysis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mv) {
  const int n_modes = static_cast<int>(modes.cols());
  Eigen::VectorXd c(n_modes);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n_modes; ++k) c(k) = modes.col(k).dot(mv);
  return c;
}

Eigen::VectorXd spectral_synthesis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& d) {
  const int n = static_cast<int>(modes.rows());
  const int n_modes = static_cast<int>(modes.cols());
  const int n_blocks = (n_modes + kBlock - 1) / kBlock;
  Eigen::MatrixXd partial(n, n_blocks);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n_blocks; ++b) {
    const int k0 = b * kBlock;
    const int len = std::min(kBlock, n_modes - k0);
    partial.col(b).noalias() = modes.middleCols(k0, len) * d.segment(k0, len);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int b = 0; b < n_blocks; ++b) out += partial.col(b);
  return out;
}

Eigen::MatrixXd element_gradients(const AssembledOperators& ops, const Eigen::MatrixXi& elements,
                                  const Eigen::VectorXd& v) {
  const int n_elem = static_cast<int>(elements.rows());
  const int nv = static_cast<int>(elements.cols());
  Eigen::MatrixXd grads(n_elem, 2);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n_elem; ++e) {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    const auto& bg = ops.basis_gradients[static_cast<size_t>(e)];
    for (int m = 0; m < nv; ++m) g += v(elements(e, m)) * bg[static_cast<size_t>(m)];
    grads.row(e) = g.transpose();
  }
  return grads;
}

Eigen::VectorXd element_averages(const Eigen::MatrixXi& elements, const Eigen::VectorXd& v) {
  const int n_elem = static_cast<int>(elements.rows());
  const int nv = static_cast<int>(elements.cols());
  Eigen::VectorXd avg(n_elem);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n_elem; ++e) {
    double s = 0.0;
    for (int m = 0; m < nv; ++m) s += v(elements(e, m));
    avg(e) = s / nv;
  }
  return avg;
}

Eigen::VectorXd flux_load(const AssembledOperators& ops, const Eigen::MatrixXi& elements,
                          const Eigen::VectorXd& u, const Eigen::MatrixXd& grad_w, double mu,
                          long* clamp_count) {
  const int n_elem = static_cast<int>(elements.rows());
  const int n = ops.n_nodes;
  Eigen::MatrixXd q(n_elem, 2);  // per-element weighted flux w_e |e| A_e grad_w
  long clamped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clamped)
  for (int e = 0; e < n_elem; ++e) {
    const int nv = static_cast<int>(elements.cols());
    double avg = 0.0;
    for (int m = 0; m < nv; ++m) avg += u(elements(e, m));
    avg /= nv;
    double w = mu + avg;
    if (w < 0.0) {
      w = 0.0;
      ++clamped;
    }
    const Eigen::Vector2d g = grad_w.row(e).transpose();
    q.row(e) = (w * ops.element_volumes(e)) *
               (ops.element_coeff[static_cast<size_t>(e)] * g).transpose();
  }
  Eigen::VectorXd b(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& [e, local] : ops.node_elements[static_cast<size_t>(i)])
      s += q.row(e).dot(ops.basis_gradients[static_cast<size_t>(e)][static_cast<size_t>(local)]);
    b(i) = s;
  }
  if (clamp_count) *clamp_count = clamped;
  return b;
}

double weighted_gradient_energy(const AssembledOperators& ops, const Eigen::MatrixXd& grads,
                                const Eigen::VectorXd& weights, bool use_coeff) {
  const int n_elem = static_cast<int>(grads.rows());
  const int n_blocks = (n_elem + kBlock - 1) / kBlock;
  Eigen::VectorXd partial = Eigen::VectorXd::Zero(n_blocks);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n_blocks; ++b) {
    const int e0 = b * kBlock;
    const int e1 = std::min(e0 + kBlock, n_elem);
    double s = 0.0;
    for (int e = e0; e < e1; ++e) {
      const Eigen::Vector2d g = grads.row(e).transpose();
      const double q = use_coeff ? g.dot(ops.element_coeff[static_cast<size_t>(e)] * g)
                                 : g.squaredNorm();
      s += weights(e) * ops.element_volumes(e) * q;
    }
    partial(b) = s;
  }
  return partial.sum();
}

}  // namespace fracpm::kernels

namespace fracpm::ref {

Eigen::VectorXd spectral_analysis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mv) {
  const int n = static_cast<int>(modes.rows());
  const int n_modes = static_cast<int>(modes.cols());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_modes);
  for (int k = 0; k < n_modes; ++k)
    for (int i = 0; i < n; ++i) c(k) += modes(i, k) * mv(i);
  return c;
}

Eigen::VectorXd spectral_synthesis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& d) {
  const int n = static_cast<int>(modes.rows());
  const int n_modes = static_cast<int>(modes.cols());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n_modes; ++k) out(i) += modes(i, k) * d(k);
  return out;
}

Eigen::MatrixXd element_gradients(const DiscreteDomain& domain, const Eigen::VectorXd& v) {
  const int n_elem = domain.element_count();
  Eigen::MatrixXd grads = Eigen::MatrixXd::Zero(n_elem, 2);
  for (int e = 0; e < n_elem; ++e) {
    if (domain.dimension == 1) {
      const int i = domain.elements(e, 0), j = domain.elements(e, 1);
      grads(e, 0) = (v(j) - v(i)) / (domain.node_coords(j, 0) - domain.node_coords(i, 0));
    } else {
      const int i = domain.elements(e, 0), j = domain.elements(e, 1), k = domain.elements(e, 2);
      const double ax = domain.node_coords(j, 0) - domain.node_coords(i, 0);
      const double ay = domain.node_coords(j, 1) - domain.node_coords(i, 1);
      const double bx = domain.node_coords(k, 0) - domain.node_coords(i, 0);
      const double by = domain.node_coords(k, 1) - domain.node_coords(i, 1);
      const double du = v(j) - v(i), dv = v(k) - v(i);
      const double det = ax * by - ay * bx;
      grads(e, 0) = (du * by - dv * ay) / det;
      grads(e, 1) = (ax * dv - bx * du) / det;
    }
  }
  return grads;
}

Eigen::VectorXd flux_load(const AssembledOperators& ops, const DiscreteDomain& domain,
                          const Eigen::VectorXd& u, const Eigen::MatrixXd& grad_w, double mu,
                          long* clamp_count) {
  const int nv = domain.dimension + 1;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ops.n_nodes);
  long clamped = 0;
  for (int e = 0; e < domain.element_count(); ++e) {
    double avg = 0.0;
    for (int m = 0; m < nv; ++m) avg += u(domain.elements(e, m));
    avg /= nv;
    double w = mu + avg;
    if (w < 0.0) {
      w = 0.0;
      ++clamped;
    }
    const Eigen::Vector2d g = grad_w.row(e).transpose();
    const Eigen::Vector2d flux = ops.element_coeff[static_cast<size_t>(e)] * g;
    for (int m = 0; m < nv; ++m)
      b(domain.elements(e, m)) +=
          w * ops.element_volumes(e) *
          flux.dot(ops.basis_gradients[static_cast<size_t>(e)][static_cast<size_t>(m)]);
  }
  if (clamp_count) *clamp_count = clamped;
  return b;
}

double weighted_gradient_energy(const AssembledOperators& ops, const Eigen::MatrixXd& grads,
                                const Eigen::VectorXd& weights, bool use_coeff) {
  double s = 0.0;
  for (int e = 0; e < static_cast<int>(grads.rows()); ++e) {
    const Eigen::Vector2d g = grads.row(e).transpose();
    const double q =
        use_coeff ? g.dot(ops.element_coeff[static_cast<size_t>(e)] * g) : g.squaredNorm();
    s += weights(e) * ops.element_volumes(e) * q;
  }
  return s;
}

}  // namespace fracpm::ref
