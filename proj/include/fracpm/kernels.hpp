#pragma once

#include "fracpm/assembly.hpp"

#include <Eigen/Dense>

namespace fracpm::kernels {

// OpenMP-parallel kernels. Every kernel is written so the floating-point
// summation order is fixed (per-output ownership or ordered block reduction),
// making results independent of the thread count.

/// c_k = modes(:,k) . mv  for all k (mv is the mass-weighted field M v).
Eigen::VectorXd spectral_analysis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mv);

/// out = modes * d, accumulated over fixed column blocks.
Eigen::VectorXd spectral_synthesis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& d);

/// Per-element constant gradient of the P1 field v: n_elem x 2 (y column zero in 1D).
Eigen::MatrixXd element_gradients(const AssembledOperators& ops, const Eigen::MatrixXi& elements,
                                  const Eigen::VectorXd& v);

/// Per-element vertex averages of v.
Eigen::VectorXd element_averages(const Eigen::MatrixXi& elements, const Eigen::VectorXd& v);

/// Load vector B with B_i = sum_e max(mu + avg_e u, 0) |e| (A_e grad_w_e) . grad phi_i.
/// Counts elements whose weight was clamped at zero.
Eigen::VectorXd flux_load(const AssembledOperators& ops, const Eigen::MatrixXi& elements,
                          const Eigen::VectorXd& u, const Eigen::MatrixXd& grad_w, double mu,
                          long* clamp_count = nullptr);

/// sum_e weights_e |e| g_e . (A_e g_e)   (use_coeff) or  g_e . g_e  otherwise.
double weighted_gradient_energy(const AssembledOperators& ops, const Eigen::MatrixXd& grads,
                                const Eigen::VectorXd& weights, bool use_coeff);

}  // namespace fracpm::kernels

namespace fracpm::ref {

// Serial reference implementations, kept deliberately naive and on independent
// code paths; the tests, the diagnostics recomputations and the benchmark
// compare against them.

Eigen::VectorXd spectral_analysis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mv);

Eigen::VectorXd spectral_synthesis(const Eigen::MatrixXd& modes, const Eigen::VectorXd& d);

/// Gradients recomputed from the node coordinates, not the assembly cache.
Eigen::MatrixXd element_gradients(const DiscreteDomain& domain, const Eigen::VectorXd& v);

Eigen::VectorXd flux_load(const AssembledOperators& ops, const DiscreteDomain& domain,
                          const Eigen::VectorXd& u, const Eigen::MatrixXd& grad_w, double mu,
                          long* clamp_count = nullptr);

double weighted_gradient_energy(const AssembledOperators& ops, const Eigen::MatrixXd& grads,
                                const Eigen::VectorXd& weights, bool use_coeff);

}  // namespace fracpm::ref
