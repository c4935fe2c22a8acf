#include "fracpm/spectral.hpp"

#include "fracpm/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <stdexcept>

namespace fracpm {

namespace {

Eigen::MatrixXd restrict_dense(const Eigen::SparseMatrix<double>& m,
                               const std::vector<int>& dofs) {
  const int nf = static_cast<int>(dofs.size());
  std::vector<int> to_free(m.rows(), -1);
  for (int i = 0; i < nf; ++i) to_free[static_cast<size_t>(dofs[static_cast<size_t>(i)])] = i;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(nf, nf);
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      const int r = to_free[static_cast<size_t>(it.row())];
      const int c = to_free[static_cast<size_t>(it.col())];
      if (r >= 0 && c >= 0) dense(r, c) = it.value();
    }
  return dense;
}

Eigen::VectorXd project_dirichlet(const SpectralDecomposition& dec, const Eigen::VectorXd& v,
                                  bool* projected) {
  Eigen::VectorXd out = v;
  bool touched = false;
  for (int i = 0; i < static_cast<int>(out.size()); ++i)
    if (dec.gamma0_mask[static_cast<size_t>(i)] && out(i) != 0.0) {
      out(i) = 0.0;
      touched = true;
    }
  if (projected) *projected = touched;
  return out;
}

}  // namespace

SpectralDecomposition eigendecompose(const AssembledOperators& ops) {
  const auto& dofs = ops.free_dofs;
  const int nf = static_cast<int>(dofs.size());
  if (nf == 0) throw std::invalid_argument("no free DOFs to decompose");

  const Eigen::MatrixXd k_free = restrict_dense(ops.stiffness_a, dofs);
  Eigen::MatrixXd vecs;  // M-orthonormal eigenvectors on free DOFs
  Eigen::VectorXd vals;

  if (ops.mass_mode == MassMode::lumped) {
    Eigen::VectorXd d(nf);
    for (int i = 0; i < nf; ++i) d(i) = ops.lumped_mass(dofs[static_cast<size_t>(i)]);
    const Eigen::VectorXd dinv_sqrt = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd b = dinv_sqrt.asDiagonal() * k_free * dinv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()));
    if (es.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed to converge");
    vals = es.eigenvalues();
    vecs = dinv_sqrt.asDiagonal() * es.eigenvectors();
  } else {
    const Eigen::MatrixXd m_free = restrict_dense(ops.mass, dofs);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k_free, m_free);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("generalized eigensolver failed to converge");
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  }

  // deterministic sign convention: largest-magnitude entry positive
  for (int k = 0; k < nf; ++k) {
    int idx = 0;
    vecs.col(k).cwiseAbs().maxCoeff(&idx);
    if (vecs(idx, k) < 0.0) vecs.col(k) = -vecs.col(k);
  }

  SpectralDecomposition dec;
  dec.eigenvalues = vals;
  dec.mass = ops.mass;
  dec.gamma0_mask = ops.gamma0_mask;
  dec.modes = Eigen::MatrixXd::Zero(ops.n_nodes, nf);
  for (int i = 0; i < nf; ++i) dec.modes.row(dofs[static_cast<size_t>(i)]) = vecs.row(i);

  if (!(dec.eigenvalues(0) > 0.0))
    throw std::runtime_error("nonpositive eigenvalue lambda_1 = " +
                             std::to_string(dec.eigenvalues(0)));

  const Eigen::MatrixXd m_modes = ops.mass * dec.modes;
  Eigen::MatrixXd gram = dec.modes.transpose() * m_modes;
  gram.diagonal().array() -= 1.0;
  dec.m_norm_check = gram.cwiseAbs().maxCoeff();
  if (dec.m_norm_check > 1e-10)
    throw std::runtime_error("eigenbasis lost M-orthonormality: " +
                             std::to_string(dec.m_norm_check));

  // residual of the free-DOF eigenproblem; Gamma0 rows carry the boundary
  // reaction and are not part of it
  const Eigen::MatrixXd k_modes = ops.stiffness_a * dec.modes;
  double worst = 0.0;
  for (int k = 0; k < nf; ++k) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < nf; ++i) {
      const int row = dofs[static_cast<size_t>(i)];
      const double kv = k_modes(row, k);
      const double rv = kv - dec.eigenvalues(k) * m_modes(row, k);
      num += rv * rv;
      den += kv * kv;
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  dec.max_eigen_residual = worst;
  if (worst > 1e-8)
    throw std::runtime_error("eigen residual above tolerance: " + std::to_string(worst));
  return dec;
}

Eigen::VectorXd apply_power(const SpectralDecomposition& dec, double exponent,
                            const Eigen::VectorXd& v, bool* projected) {
  const Eigen::VectorXd vp = project_dirichlet(dec, v, projected);
  const Eigen::VectorXd c = kernels::spectral_analysis(dec.modes, dec.mass * vp);
  const Eigen::VectorXd d = dec.eigenvalues.array().pow(exponent) * c.array();
  return kernels::spectral_synthesis(dec.modes, d);
}

Eigen::VectorXd k_s(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& v,
                    bool* projected) {
  return apply_power(dec, -s, v, projected);
}

Eigen::VectorXd h_s(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& v,
                    bool* projected) {
  return apply_power(dec, -s / 2.0, v, projected);
}

double fractional_norm(const SpectralDecomposition& dec, double sigma, const Eigen::VectorXd& v) {
  const Eigen::VectorXd vp = project_dirichlet(dec, v, nullptr);
  const Eigen::VectorXd c = kernels::spectral_analysis(dec.modes, dec.mass * vp);
  return std::sqrt((dec.eigenvalues.array().pow(2.0 * sigma) * c.array().square()).sum());
}

double fractional_norm_graph(const SpectralDecomposition& dec, double sigma,
                             const Eigen::VectorXd& v) {
  const Eigen::VectorXd vp = project_dirichlet(dec, v, nullptr);
  const Eigen::VectorXd c = kernels::spectral_analysis(dec.modes, dec.mass * vp);
  const double l2sq = c.array().square().sum();
  const double fsq = (dec.eigenvalues.array().pow(2.0 * sigma) * c.array().square()).sum();
  return std::sqrt(l2sq + fsq);
}

const LawCheck* OperatorLawReport::find(const std::string& name) const {
  for (const auto& l : laws)
    if (l.name == name) return &l;
  return nullptr;
}

OperatorLawReport verify_operator_suite(const SpectralDecomposition& dec,
                                        const AssembledOperators& ops, int trials,
                                        std::uint64_t seed) {
  OperatorLawReport report;
  auto add = [&report](const std::string& name, double tol) {
    report.laws.push_back({name, 0.0, tol, true});
    return report.laws.size() - 1;
  };
  const size_t self_adj = add("self_adjoint", 1e-8);
  const size_t round_trip = add("inverse_round_trip", 1e-8);
  const size_t semigroup = add("semigroup", 1e-8);
  const size_t commute = add("power_commute", 1e-10);
  const size_t poincare = add("poincare", 1e-10);
  const size_t grad_ks = add("gradient_bound_ks", 1e-10);
  const size_t grad_hs = add("gradient_bound_hs", 1e-10);
  const size_t pairing_id = add("pairing_identity", 1e-8);
  const size_t pairing_sand = add("pairing_sandwich", 1e-10);
  const size_t norm_equiv = add("norm_equivalence", 1e-10);
  const size_t embedding = add("embedding_monotone", 1e-10);

  auto track = [&report](size_t idx, double violation) {
    auto& law = report.laws[idx];
    law.max_violation = std::max(law.max_violation, violation);
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double lambda1 = dec.eigenvalues(0);
  const int n = ops.n_nodes;

  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd u(n), v(n);
    for (int i = 0; i < n; ++i) {
      const bool fixed = ops.gamma0_mask[static_cast<size_t>(i)] != 0;
      u(i) = fixed ? 0.0 : unif(rng);
      v(i) = fixed ? 0.0 : unif(rng);
    }
    const double u_m = l2_norm(ops, u);
    const double grad_u = gradient_energy(ops, u);

    // (2.11): Lambda1 |u|_H1^2 <= ||L^{1/2} u||^2 <= Lambda2 |u|_H1^2
    const double half_norm_sq = std::pow(fractional_norm(dec, 0.5, u), 2);
    track(norm_equiv, std::max(ops.lambda1 * grad_u - half_norm_sq,
                               half_norm_sq - ops.lambda2 * grad_u) /
                          std::max(half_norm_sq, 1e-300));

    for (int si = 1; si <= 9; ++si) {
      const double s = si / 10.0;

      const Eigen::VectorXd lsu = apply_power(dec, s, u);
      const Eigen::VectorXd lsv = apply_power(dec, s, v);
      const double lhs = l2_inner(ops, lsu, v);
      const double rhs = l2_inner(ops, u, lsv);
      track(self_adj, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));

      const Eigen::VectorXd back = apply_power(dec, s, apply_power(dec, -s, u));
      track(round_trip, (back - u).norm() / u.norm());

      const Eigen::VectorXd two_step = apply_power(dec, s / 2.0, apply_power(dec, s / 2.0, u));
      const Eigen::VectorXd one_step = apply_power(dec, s, u);
      track(semigroup, (two_step - one_step).norm() / one_step.norm());

      const Eigen::VectorXd ab = apply_power(dec, s, apply_power(dec, -s / 2.0, u));
      const Eigen::VectorXd ba = apply_power(dec, -s / 2.0, apply_power(dec, s, u));
      track(commute, (ab - ba).norm() / std::max(ab.norm(), 1e-300));

      const double frac = fractional_norm(dec, s, u);
      track(poincare, (u_m - std::pow(lambda1, -s) * frac) / std::max(u_m, 1e-300));

      const Eigen::VectorXd ksu = k_s(dec, s, u);
      const Eigen::VectorXd hsu = h_s(dec, s, u);
      const double grad_ksu = gradient_energy(ops, ksu);
      const double grad_hsu = gradient_energy(ops, hsu);
      const double c_omega = ops.lambda2 / ops.lambda1 * std::pow(lambda1, -2.0 * s);
      track(grad_ks, (grad_ksu - c_omega * grad_u) / std::max(c_omega * grad_u, 1e-300));
      const double c_hs = ops.lambda2 / ops.lambda1 * std::pow(lambda1, -s);
      track(grad_hs, (grad_hsu - c_hs * grad_u) / std::max(c_hs * grad_u, 1e-300));

      // Prop 2.6(2): int A grad K_s u . grad u both as K_A pairing and as
      // the (1-s)/2 spectral norm, then the Lambda sandwich around it.
      const double pairing = ksu.dot(ops.stiffness_a * u);
      const double spectral_sq = std::pow(fractional_norm(dec, (1.0 - s) / 2.0, u), 2);
      track(pairing_id, std::abs(pairing - spectral_sq) / std::max(spectral_sq, 1e-300));
      track(pairing_sand, std::max(ops.lambda1 * grad_hsu - pairing,
                                   pairing - ops.lambda2 * grad_hsu) /
                              std::max(pairing, 1e-300));

      if (si >= 2) {
        const double s_lo = (si - 1) / 10.0;
        const double n_lo = fractional_norm(dec, s_lo, u);
        const double n_hi = fractional_norm(dec, s, u);
        const double bound = std::max(1.0, std::pow(lambda1, s_lo - s)) * n_hi;
        track(embedding, (n_lo - bound) / std::max(bound, 1e-300));
      }
    }
  }

  for (auto& law : report.laws) {
    law.pass = law.max_violation <= law.tolerance;
    report.all_pass = report.all_pass && law.pass;
  }
  return report;
}

}  // namespace fracpm
