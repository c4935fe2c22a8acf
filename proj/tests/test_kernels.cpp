#include "fracpm/kernels.hpp"
#include "fracpm/spectral.hpp"

#include <doctest.h>

#include <random>

using namespace fracpm;

namespace {

struct Fixture {
  DiscreteDomain dom;
  CoefficientField coeff;
  AssembledOperators ops;
  SpectralDecomposition dec;
  Fixture()
      : dom(build_domain(2, 10, {Side::left, Side::bottom})),
        coeff(build_coefficients(dom,
                                 [](const Eigen::Vector2d& x) {
                                   Eigen::Matrix2d m;
                                   m << 1.5 + x(0), 0.2, 0.2, 1.0 + x(1);
                                   return m;
                                 })),
        ops(assemble(dom, coeff, MassMode::lumped)),
        dec(eigendecompose(ops)) {}
};

Eigen::VectorXd random_field(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = unif(rng);
  return v;
}

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1.0, a.norm());
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
  const Fixture f;
  const Eigen::VectorXd v = random_field(f.ops.n_nodes, 11);
  const Eigen::VectorXd mv = f.ops.mass * v;

  const Eigen::VectorXd ca = kernels::spectral_analysis(f.dec.modes, mv);
  const Eigen::VectorXd cb = ref::spectral_analysis(f.dec.modes, mv);
  CHECK(rel_diff(ca, cb) < 1e-12);

  const Eigen::VectorXd sa = kernels::spectral_synthesis(f.dec.modes, ca);
  const Eigen::VectorXd sb = ref::spectral_synthesis(f.dec.modes, ca);
  CHECK(rel_diff(sa, sb) < 1e-12);

  const Eigen::MatrixXd ga = kernels::element_gradients(f.ops, f.ops.elements, v);
  const Eigen::MatrixXd gb = ref::element_gradients(f.dom, v);
  CHECK((ga - gb).cwiseAbs().maxCoeff() < 1e-11);

  long clamp_a = 0, clamp_b = 0;
  const Eigen::VectorXd ba = kernels::flux_load(f.ops, f.ops.elements, v, ga, 0.3, &clamp_a);
  const Eigen::VectorXd bb = ref::flux_load(f.ops, f.dom, v, gb, 0.3, &clamp_b);
  CHECK(rel_diff(ba, bb) < 1e-11);
  CHECK(clamp_a == clamp_b);

  const Eigen::VectorXd w = random_field(f.dom.element_count(), 5).cwiseAbs();
  CHECK(kernels::weighted_gradient_energy(f.ops, ga, w, true) ==
        doctest::Approx(ref::weighted_gradient_energy(f.ops, gb, w, true)).epsilon(1e-11));
}

TEST_CASE("kernels are bitwise deterministic across repeated calls") {
  const Fixture f;
  const Eigen::VectorXd v = random_field(f.ops.n_nodes, 3);
  const Eigen::VectorXd mv = f.ops.mass * v;
  const Eigen::VectorXd c1 = kernels::spectral_analysis(f.dec.modes, mv);
  const Eigen::VectorXd c2 = kernels::spectral_analysis(f.dec.modes, mv);
  CHECK(c1 == c2);
  const Eigen::VectorXd s1 = kernels::spectral_synthesis(f.dec.modes, c1);
  const Eigen::VectorXd s2 = kernels::spectral_synthesis(f.dec.modes, c1);
  CHECK(s1 == s2);
  const Eigen::MatrixXd g = kernels::element_gradients(f.ops, f.ops.elements, v);
  const Eigen::VectorXd b1 = kernels::flux_load(f.ops, f.ops.elements, v, g, 0.1);
  const Eigen::VectorXd b2 = kernels::flux_load(f.ops, f.ops.elements, v, g, 0.1);
  CHECK(b1 == b2);
}

TEST_CASE("flux load vanishes for the zero state") {
  const Fixture f;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(f.ops.n_nodes);
  const Eigen::MatrixXd g = kernels::element_gradients(f.ops, f.ops.elements, zero);
  CHECK(kernels::flux_load(f.ops, f.ops.elements, zero, g, 0.0).norm() == 0.0);
}

TEST_CASE("flux clamp counter sees negative weights") {
  const Fixture f;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(f.ops.n_nodes, -1.0);
  const Eigen::MatrixXd g =
      kernels::element_gradients(f.ops, f.ops.elements, random_field(f.ops.n_nodes, 9));
  long clamped = 0;
  kernels::flux_load(f.ops, f.ops.elements, u, g, 0.5, &clamped);
  CHECK(clamped == f.dom.element_count());
}
