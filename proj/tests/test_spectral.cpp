#include "fracpm/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fracpm;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Problem1d {
  DiscreteDomain dom;
  CoefficientField coeff;
  AssembledOperators ops;
  SpectralDecomposition dec;
  Problem1d(int n, std::vector<Side> gamma0, double a = 1.0)
      : dom(build_domain(1, n, gamma0)),
        coeff(build_coefficients(
            dom, [a](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity() * a; })),
        ops(assemble(dom, coeff, MassMode::lumped)),
        dec(eigendecompose(ops)) {}
};

Eigen::VectorXd random_dirichlet_field(const AssembledOperators& ops, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(ops.n_nodes);
  for (int i = 0; i < ops.n_nodes; ++i)
    v(i) = ops.gamma0_mask[static_cast<size_t>(i)] ? 0.0 : unif(rng);
  return v;
}

}  // namespace

TEST_CASE("Dirichlet-Dirichlet eigenvalues approach (k pi)^2") {
  const Problem1d p(200, {Side::left, Side::right});
  for (int k = 1; k <= 5; ++k) {
    const double exact = kPi * kPi * k * k;
    CHECK(std::abs(p.dec.eigenvalues(k - 1) - exact) / exact < 0.01);
  }
  CHECK(p.dec.eigenvalues(0) == doctest::Approx(9.8696).epsilon(0.01));
}

TEST_CASE("mixed-boundary eigenvalues approach ((k - 1/2) pi)^2") {
  const Problem1d p(200, {Side::left});
  for (int k = 1; k <= 5; ++k) {
    const double exact = std::pow((k - 0.5) * kPi, 2);
    CHECK(std::abs(p.dec.eigenvalues(k - 1) - exact) / exact < 0.01);
  }
  CHECK(p.dec.eigenvalues(0) == doctest::Approx(2.4674).epsilon(0.01));
}

TEST_CASE("constant coefficient scales the spectrum linearly") {
  const Problem1d base(40, {Side::left});
  const Problem1d scaled(40, {Side::left}, 4.0);
  for (int k = 0; k < base.dec.mode_count(); ++k)
    CHECK(scaled.dec.eigenvalues(k) ==
          doctest::Approx(4.0 * base.dec.eigenvalues(k)).epsilon(1e-12));
}

TEST_CASE("decomposition invariants hold") {
  const Problem1d p(60, {Side::left});
  CHECK(p.dec.eigenvalues(0) > 0.0);
  CHECK(p.dec.m_norm_check <= 1e-10);
  CHECK(p.dec.max_eigen_residual <= 1e-8);
  // modes vanish on Gamma0
  for (int nd : p.dom.gamma0_nodes) CHECK(p.dec.modes.row(nd).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_power with exponent 0 reproduces the projected field") {
  const Problem1d p(50, {Side::left});
  Eigen::VectorXd v = random_dirichlet_field(p.ops, 21);
  v(0) = 0.7;  // nonzero Gamma0 value must be projected away, with a warning
  bool projected = false;
  const Eigen::VectorXd out = apply_power(p.dec, 0.0, v, &projected);
  CHECK(projected);
  Eigen::VectorXd vp = v;
  vp(0) = 0.0;
  CHECK((out - vp).norm() / vp.norm() < 1e-10);
}

TEST_CASE("single-mode scaling: lambda_1 = 4 gives K_{1/2} phi_1 = phi_1 / 2") {
  // rescale the coefficient so the discrete ground eigenvalue is exactly 4
  const Problem1d probe(50, {Side::left});
  const double scale = 4.0 / probe.dec.eigenvalues(0);
  const Problem1d p(50, {Side::left}, scale);
  REQUIRE(p.dec.eigenvalues(0) == doctest::Approx(4.0).epsilon(1e-12));
  const Eigen::VectorXd phi1 = p.dec.modes.col(0);
  const Eigen::VectorXd out = apply_power(p.dec, -0.5, phi1);
  CHECK((out - 0.5 * phi1).norm() / phi1.norm() < 1e-12);
}

TEST_CASE("K_s phi_2 scales by the discrete lambda_2^{-1/2}") {
  const Problem1d p(200, {Side::left});
  const double lambda2 = p.dec.eigenvalues(1);
  CHECK(lambda2 == doctest::Approx(22.207).epsilon(0.01));
  const Eigen::VectorXd phi2 = p.dec.modes.col(1);
  const Eigen::VectorXd out = k_s(p.dec, 0.5, phi2);
  const double factor = std::pow(lambda2, -0.5);
  CHECK(factor == doctest::Approx(0.21222).epsilon(1e-3));
  CHECK((out - factor * phi2).norm() / phi2.norm() < 1e-12);
}

TEST_CASE("inverse round trip and half-power composition") {
  const Problem1d p(80, {Side::left});
  const Eigen::VectorXd v = random_dirichlet_field(p.ops, 33);
  for (double s : {0.25, 0.5, 0.75}) {
    const Eigen::VectorXd back = apply_power(p.dec, s, apply_power(p.dec, -s, v));
    CHECK((back - v).norm() / v.norm() < 1e-10);
    const Eigen::VectorXd two = h_s(p.dec, s, h_s(p.dec, s, v));
    const Eigen::VectorXd one = k_s(p.dec, s, v);
    CHECK((two - one).norm() / one.norm() < 1e-10);
  }
  CHECK(k_s(p.dec, 0.5, Eigen::VectorXd::Zero(p.ops.n_nodes)).norm() == 0.0);
}

TEST_CASE("fractional norms: plain L2 at sigma = 0, lambda^sigma on eigenmodes") {
  const Problem1d p(60, {Side::left});
  const Eigen::VectorXd v = random_dirichlet_field(p.ops, 44);
  CHECK(fractional_norm(p.dec, 0.0, v) == doctest::Approx(l2_norm(p.ops, v)).epsilon(1e-12));
  for (int k : {0, 2, 5})
    for (double sigma : {0.3, 0.5, 0.9})
      CHECK(fractional_norm(p.dec, sigma, p.dec.modes.col(k)) ==
            doctest::Approx(std::pow(p.dec.eigenvalues(k), sigma)).epsilon(1e-11));
  // Poincare across the s-grid
  for (int si = 1; si <= 9; ++si) {
    const double s = si / 10.0;
    CHECK(l2_norm(p.ops, v) <=
          std::pow(p.dec.eigenvalues(0), -s) * fractional_norm(p.dec, s, v) * (1 + 1e-12));
  }
}

TEST_CASE("discrete norm equivalence is an identity: v'K_A v = ||L^{1/2} v||^2") {
  const Problem1d p(60, {Side::left});
  for (unsigned seed : {1u, 2u, 3u}) {
    const Eigen::VectorXd v = random_dirichlet_field(p.ops, seed);
    const double lhs = a_gradient_energy(p.ops, v);
    const double rhs = std::pow(fractional_norm(p.dec, 0.5, v), 2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("operator-law suite passes on the identity coefficient") {
  const Problem1d p(60, {Side::left});
  const auto report = verify_operator_suite(p.dec, p.ops, 25);
  CHECK(report.all_pass);
  for (const auto& law : report.laws) {
    INFO(law.name, " violation ", law.max_violation);
    CHECK(law.pass);
    if (law.name == "inverse_round_trip" || law.name == "semigroup" ||
        law.name == "pairing_identity" || law.name == "self_adjoint")
      CHECK(law.max_violation < 1e-10);
  }
}

TEST_CASE("operator-law suite passes on an anisotropic 2D field") {
  const auto dom = build_domain(2, 10, {Side::left, Side::top});
  const auto coeff = build_coefficients(dom, [](const Eigen::Vector2d& x) {
    Eigen::Matrix2d m;
    m << 2.0 + 0.5 * x(1), 0.25, 0.25, 0.75;
    return m;
  });
  const auto ops = assemble(dom, coeff, MassMode::lumped);
  const auto dec = eigendecompose(ops);
  const auto report = verify_operator_suite(dec, ops, 10);
  for (const auto& law : report.laws) {
    INFO(law.name, " violation ", law.max_violation);
    CHECK(law.pass);
  }
}

TEST_CASE("suite also passes with the consistent mass matrix") {
  const auto dom = build_domain(1, 40, {Side::left});
  const auto ops =
      assemble(dom, build_coefficients(dom, identity_coefficient()), MassMode::consistent);
  const auto dec = eigendecompose(ops);
  const auto report = verify_operator_suite(dec, ops, 10);
  CHECK(report.all_pass);
}

TEST_CASE("scaling diagnostic: jump-like profiles keep finite (1-s)/2 norms") {
  const Problem1d p(100, {Side::left});
  Eigen::VectorXd jump(p.ops.n_nodes);
  for (int i = 0; i < p.ops.n_nodes; ++i)
    jump(i) = p.dom.node_coords(i, 0) > 0.5 ? 1.0 : 0.0;
  jump(0) = 0.0;
  for (int si = 1; si <= 9; ++si) {
    const double s = si / 10.0;
    CHECK(std::isfinite(fractional_norm(p.dec, (1.0 - s) / 2.0, jump)));
  }
}
