#include "fracpm/kernels.hpp"
#include "fracpm/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace fracpm;

namespace {

constexpr double kPi = 3.14159265358979323846;

const Problem& mixed_1d(int n) {
  static std::map<int, Problem> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, build_problem(1, n, {Side::left}, identity_coefficient(),
                                        MassMode::lumped)).first;
  return it->second;
}

SolverConfig standard_config() {
  SolverConfig cfg;
  cfg.s = 0.5;
  cfg.delta = 1e-2;
  cfg.mu = 1e-2;
  cfg.dt = 1e-4;
  cfg.t_end = 0.1;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  SolverConfig cfg = standard_config();
  cfg.s = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("s must lie in (0,1)"),
                       std::invalid_argument);
  cfg = standard_config();
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.limit_replay = true;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // needs Picard
  cfg.picard_iters = 2;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("initial profiles are nonnegative and vanish on Gamma0") {
  const Problem& p = mixed_1d(50);
  for (const char* name : {"sine_compatible", "bump", "plateau", "zero"}) {
    const InitialData u0 = initial_profile(p.domain, name);
    CHECK_NOTHROW(u0.validate(p.domain));
    CHECK(u0.values.minCoeff() >= 0.0);
    CHECK(u0.values(0) == 0.0);
  }
  CHECK_THROWS_AS(initial_profile(p.domain, "unknown"), std::invalid_argument);
}

TEST_CASE("zero data is an exact fixed point of the scheme") {
  const Problem& p = mixed_1d(40);
  SolverConfig cfg = standard_config();
  cfg.t_end = 20 * cfg.dt;
  InitialData zero;
  zero.values = Eigen::VectorXd::Zero(p.domain.node_count());
  const StateTrajectory traj = run(zero, cfg, p);
  REQUIRE(!traj.aborted);
  for (const auto& s : traj.states) CHECK(s.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& rec : traj.ledger) {
    CHECK(rec.mass == 0.0);
    CHECK(rec.entropy == 0.0);
    CHECK(rec.flux_norm == 0.0);
  }
}

TEST_CASE("linear regime: per-mode resolvent decay 1/(1 + dt delta lambda_k)") {
  const Problem& p = mixed_1d(100);
  SolverConfig cfg = standard_config();
  cfg.disable_transport = true;
  ImexStepper stepper(p, cfg);
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd mode = p.dec.modes.col(k);
    const Eigen::VectorXd next = stepper.step(mode, cfg.dt);
    const double factor = 1.0 / (1.0 + cfg.dt * cfg.delta * p.dec.eigenvalues(k));
    CHECK((next - factor * mode).norm() / mode.norm() < 1e-12);
  }
}

TEST_CASE("flux load: zero for u = 0, exactly quadratic in small single-mode data") {
  const Problem& p = mixed_1d(80);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p.domain.node_count());
  CHECK(flux_form(p.dec, p.ops, 0.5, 0.0, zero).norm() == 0.0);

  const Eigen::VectorXd phi1 = p.dec.modes.col(0);
  const double eps = 1e-3;
  const double n_full = flux_form(p.dec, p.ops, 0.5, 0.0, eps * phi1).norm();
  const double n_half = flux_form(p.dec, p.ops, 0.5, 0.0, 0.5 * eps * phi1).norm();
  CHECK(n_full / n_half == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("transport pairing dominates the weighted K_s gradient dissipation") {
  const Problem& p = mixed_1d(60);
  const double s = 0.5, mu = 1e-2;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  long clamps = 0;
  const Eigen::VectorXd b = flux_form(p.dec, p.ops, s, mu, u0.values, &clamps);
  REQUIRE(clamps == 0);
  const double pairing = u0.values.dot(b);
  const Eigen::VectorXd ksu = k_s(p.dec, s, u0.values);
  const Eigen::MatrixXd grads = ref::element_gradients(p.domain, ksu);
  const Eigen::VectorXd avg = kernels::element_averages(p.ops.elements, u0.values);
  const Eigen::VectorXd weights = (avg.array() + mu).matrix();
  const double dissipation = ref::weighted_gradient_energy(p.ops, grads, weights, false);
  CHECK(pairing >= p.ops.lambda1 * dissipation * (1.0 - 1e-8) - 1e-12);
}

TEST_CASE("single IMEX step: mass change equals -dt times the Gamma0 flux residual") {
  const Problem& p = mixed_1d(100);
  SolverConfig cfg = standard_config();
  cfg.t_end = cfg.dt;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  const StateTrajectory traj = run(u0, cfg, p);
  REQUIRE(traj.step_count() == 2);
  const Eigen::VectorXd& u_old = traj.states[0];
  const Eigen::VectorXd& u_new = traj.states[1];
  const double dmass = integral(p.ops, u_new) - integral(p.ops, u_old);

  const Eigen::VectorXd b = flux_form(p.dec, p.ops, cfg.s, cfg.mu, u_old);
  const Eigen::VectorXd kau = p.ops.stiffness_a * u_new;
  double boundary_residual = 0.0;
  for (int nd : p.domain.gamma0_nodes) boundary_residual += cfg.delta * kau(nd) + b(nd);
  CHECK(dmass == doctest::Approx(cfg.dt * boundary_residual)
                     .epsilon(1e-10));
  CHECK(std::abs(dmass) < 1e-4 * integral(p.ops, u_old));
}

TEST_CASE("standard run: initial mass matches the quadrature oracle") {
  const Problem& p = mixed_1d(100);
  SolverConfig cfg = standard_config();
  cfg.t_end = 2 * cfg.dt;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  const StateTrajectory traj = run(u0, cfg, p);
  // independent Simpson quadrature of the clipped profile min(sin(pi x/2), 1 - mu)
  const int m = 20000;
  double simpson = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = static_cast<double>(i) / m;
    const double f = std::min(std::sin(kPi * x / 2.0), 1.0 - cfg.mu);
    simpson += (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
  }
  simpson /= 3.0 * m;
  CHECK(traj.ledger.front().mass == doctest::Approx(simpson).epsilon(1e-3));
  CHECK(traj.ledger.front().mass == doctest::Approx(2.0 / kPi).epsilon(5e-3));
}

TEST_CASE("trajectories are deterministic and well-formed") {
  const Problem& p = mixed_1d(60);
  SolverConfig cfg = standard_config();
  cfg.t_end = 30 * cfg.dt;
  const InitialData u0 = initial_profile(p.domain, "bump");
  const StateTrajectory a = run(u0, cfg, p);
  const StateTrajectory b = run(u0, cfg, p);
  REQUIRE(a.states.size() == b.states.size());
  for (size_t n = 0; n < a.states.size(); ++n) CHECK(a.states[n] == b.states[n]);
  for (size_t n = 1; n < a.times.size(); ++n) CHECK(a.times[n] > a.times[n - 1]);
  CHECK(a.times.back() == doctest::Approx(cfg.t_end).epsilon(1e-12));
  CHECK(a.ledger.size() == a.states.size());
}

TEST_CASE("picard tightening converges and is recorded") {
  const Problem& p = mixed_1d(60);
  SolverConfig cfg = standard_config();
  cfg.t_end = 10 * cfg.dt;
  cfg.picard_iters = 5;
  cfg.picard_tol = 1e-12;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  const StateTrajectory traj = run(u0, cfg, p);
  REQUIRE(!traj.aborted);
  for (size_t n = 1; n < traj.ledger.size(); ++n) CHECK(traj.ledger[n].picard_used >= 1);
}

TEST_CASE("stability envelope: ||u^{n+1}||^2 <= ||u^n||^2 + 2 dt |u^n . B(u^n)|") {
  const Problem& p = mixed_1d(60);
  SolverConfig cfg = standard_config();
  cfg.t_end = 50 * cfg.dt;
  cfg.picard_iters = 3;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  const StateTrajectory traj = run(u0, cfg, p);
  REQUIRE(!traj.aborted);
  for (size_t n = 0; n + 1 < traj.states.size(); ++n) {
    if (traj.ledger[n + 1].clamp_count > 0) continue;
    const double before = std::pow(l2_norm(p.ops, traj.states[n]), 2);
    const double after = std::pow(l2_norm(p.ops, traj.states[n + 1]), 2);
    const double dt = traj.times[n + 1] - traj.times[n];
    const double pairing =
        std::abs(traj.states[n].dot(flux_form(p.dec, p.ops, cfg.s, cfg.mu, traj.states[n])));
    CHECK(after <= before + 2.0 * dt * pairing + 1e-12);
  }
}

TEST_CASE("adaptive halving: oversized dt is caught and logged") {
  const Problem& p = mixed_1d(100);
  SolverConfig cfg = standard_config();
  cfg.dt = 1e-2;  // 100x the stable choice
  cfg.t_end = 4e-2;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  const StateTrajectory traj = run(u0, cfg, p);
  CHECK(!traj.adapt_log.empty());
  if (!traj.aborted) {
    double worst = 0.0;
    for (const auto& s : traj.states) worst = std::max(worst, -s.minCoeff());
    CHECK(worst <= cfg.tol_neg_factor * traj.u0_linf);
  }
}

TEST_CASE("limit replay: delta = 0 with mandatory Picard") {
  const Problem& p = mixed_1d(60);
  SolverConfig cfg = standard_config();
  cfg.delta = 0.0;
  cfg.limit_replay = true;
  cfg.picard_iters = 4;
  cfg.dt = 5e-5;
  cfg.t_end = 20 * cfg.dt;
  const InitialData u0 = initial_profile(p.domain, "sine_compatible");
  const StateTrajectory traj = run(u0, cfg, p);
  CHECK(!traj.aborted);
}

TEST_CASE("sweep on zero data: all Cauchy differences vanish") {
  const Problem& p = mixed_1d(40);
  SolverConfig cfg = standard_config();
  cfg.t_end = 10 * cfg.dt;
  InitialData zero;
  zero.values = Eigen::VectorXd::Zero(p.domain.node_count());
  const SweepReport sweep =
      limit_sweep(zero, cfg, {1e-2, 5e-3}, {1e-2, 5e-3}, p, 2);
  REQUIRE(sweep.runs.size() == 4);
  for (const auto& r : sweep.runs) {
    CHECK(r.ok);
    CHECK(r.zero_mass);
    CHECK(r.mass_drift == 0.0);
    if (r.has_cauchy) CHECK(r.cauchy_diff == 0.0);
  }
}

TEST_CASE("sweep grids must decrease strictly") {
  const Problem& p = mixed_1d(40);
  InitialData zero;
  zero.values = Eigen::VectorXd::Zero(p.domain.node_count());
  CHECK_THROWS_AS(limit_sweep(zero, standard_config(), {1e-2, 1e-2}, {1e-2}, p, 1),
                  std::invalid_argument);
}
