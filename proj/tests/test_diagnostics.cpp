#include "fracpm/diagnostics.hpp"

#include <doctest.h>

#include <cmath>

using namespace fracpm;

namespace {

const Problem& mixed_1d(int n) {
  static std::map<int, Problem> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, build_problem(1, n, {Side::left}, identity_coefficient(),
                                        MassMode::lumped)).first;
  return it->second;
}

StateTrajectory short_run(const Problem& p, double t_end, double dt = 1e-4,
                          const char* profile = "sine_compatible") {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  const InitialData u0 = initial_profile(p.domain, profile);
  StateTrajectory traj = run(u0, cfg, p);
  REQUIRE(!traj.aborted);
  return traj;
}

StateTrajectory frozen_field(const Problem& p, const Eigen::VectorXd& u) {
  StateTrajectory traj;
  traj.times = {0.0};
  traj.states = {u};
  traj.config.mu = 1e-2;
  traj.u0_linf = u.size() ? u.maxCoeff() : 0.0;
  return traj;
}

}  // namespace

TEST_CASE("entropy density closed forms") {
  CHECK(eta(0.0, 1e-2) == 0.0);
  CHECK(eta(-1.0, 1e-2) == 0.0);
  // mu = 1: eta(e - 1) = e log(e) - (e - 1) = 1 exactly
  CHECK(eta(std::exp(1.0) - 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  // nondecreasing on a lambda grid, and dominated by lambda log(1 + lambda/mu)
  const double mu = 1e-2;
  double prev = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double lambda = i * 0.01;
    const double val = eta(lambda, mu);
    CHECK(val >= prev - 1e-12);
    CHECK(val <= lambda * std::log1p(lambda / mu) + 1e-12);
    prev = val;
  }
}

TEST_CASE("bounds/mass checks on the zero trajectory are trivially clean") {
  const Problem& p = mixed_1d(40);
  SolverConfig cfg;
  cfg.t_end = 10 * cfg.dt;
  InitialData zero;
  zero.values = Eigen::VectorXd::Zero(p.domain.node_count());
  const StateTrajectory traj = run(zero, cfg, p);
  const CheckReport bounds = check_bounds(traj);
  CHECK(bounds.pass);
  CHECK(bounds.find("undershoot")->value == 0.0);
  CHECK(bounds.find("overshoot")->value == 0.0);
  const CheckReport mass = check_mass(traj);
  CHECK(mass.pass);
  CHECK(mass.find("max_drift")->value == 0.0);
}

TEST_CASE("ledger recomputation agrees to 1e-12") {
  const Problem& p = mixed_1d(60);
  const StateTrajectory traj = short_run(p, 3e-3);
  const CheckReport rep = check_ledger_consistency(traj, p);
  INFO(rep.find("max_relative_disagreement")->value);
  CHECK(rep.pass);
}

TEST_CASE("first energy ledger stays under the initial entropy plus slack") {
  const Problem& p = mixed_1d(100);
  const StateTrajectory traj = short_run(p, 2e-2);
  const CheckReport rep = check_first_energy(traj, p);
  INFO("margin ", rep.find("within_slack_margin")->value);
  CHECK(rep.pass);
  CHECK(rep.find("corollary_grad_bound")->pass);

  // slack shrinks by >= 1.5x when dt halves
  const StateTrajectory half = short_run(p, 2e-2, 5e-5);
  const CheckReport rep_half = check_first_energy(half, p);
  CHECK(rep_half.pass);
  CHECK(rep.find("slack_final")->value / rep_half.find("slack_final")->value >= 1.5);
}

TEST_CASE("second energy decays within slack, and exactly in the linear regime") {
  const Problem& p = mixed_1d(100);
  const StateTrajectory traj = short_run(p, 2e-2);
  const CheckReport rep = check_second_energy(traj, p);
  INFO("margin ", rep.find("pair_violation_margin")->value);
  CHECK(rep.pass);

  // linear regime: one implicit step scales mode k by 1/(1 + dt delta lambda),
  // so 1/2 ||H_s u||^2 contracts by that factor squared, checkable to 1e-12
  SolverConfig cfg;
  cfg.disable_transport = true;
  ImexStepper stepper(p, cfg);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd mode = p.dec.modes.col(k);
    const Eigen::VectorXd next = stepper.step(mode, cfg.dt);
    const double factor = 1.0 / (1.0 + cfg.dt * cfg.delta * p.dec.eigenvalues(k));
    const double before = 0.5 * std::pow(fractional_norm(p.dec, -cfg.s / 2.0, mode), 2);
    const double after = 0.5 * std::pow(fractional_norm(p.dec, -cfg.s / 2.0, next), 2);
    CHECK(after == doctest::Approx(before * factor * factor).epsilon(1e-12));
    CHECK(after <= before);
  }
}

TEST_CASE("weak residual vanishes identically on the zero trajectory") {
  const Problem& p = mixed_1d(40);
  SolverConfig cfg;
  cfg.t_end = 10 * cfg.dt;
  InitialData zero;
  zero.values = Eigen::VectorXd::Zero(p.domain.node_count());
  const StateTrajectory traj = run(zero, cfg, p);
  const TestBank bank = make_test_bank(p, cfg.t_end);
  const CheckReport rep = weak_residual(traj, p, bank);
  CHECK(rep.pass);
  CHECK(rep.find("max_abs_residual")->value == 0.0);
}

TEST_CASE("weak residual: double evaluation agrees, halving dt shrinks the residual") {
  const Problem& p = mixed_1d(60);
  const double T = 1e-2;
  const StateTrajectory coarse = short_run(p, T, 4e-4);
  const StateTrajectory fine = short_run(p, T, 2e-4);
  const TestBank bank = make_test_bank(p, T);
  const CheckReport rc = weak_residual(coarse, p, bank);
  const CheckReport rf = weak_residual(fine, p, bank);
  CHECK(rc.find("double_evaluation_max_diff")->value <= 1e-10);
  CHECK(rf.find("double_evaluation_max_diff")->value <= 1e-10);

  // theta(0) = 0 tests isolate the evolution residual; dt -> dt/2 roughly halves it
  double coarse_max = 0.0, fine_max = 0.0;
  for (size_t j = 0; j < bank.tests.size(); ++j) {
    if (!bank.tests[j].theta0_zero) continue;
    coarse_max = std::max(coarse_max, rc.rows[j].value);
    fine_max = std::max(fine_max, rf.rows[j].value);
  }
  INFO("coarse ", coarse_max, " fine ", fine_max);
  CHECK(coarse_max / fine_max >= 1.4);
  CHECK(coarse_max / fine_max <= 2.6);
}

TEST_CASE("shell flux: zero state gives zero flux; 1D natural residual consistency") {
  const Problem& p = mixed_1d(60);
  SolverConfig cfg;
  cfg.t_end = 10 * cfg.dt;
  InitialData zero;
  zero.values = Eigen::VectorXd::Zero(p.domain.node_count());
  const StateTrajectory ztraj = run(zero, cfg, p);
  const TestBank bank = make_test_bank(p, cfg.t_end);
  const ShellFamily shells = build_shells(p.domain, 4);
  const CheckReport zrep = shell_flux(ztraj, p, shells, bank);
  for (const auto& row : zrep.rows)
    if (row.quantity == "flux_mag") CHECK(row.value == 0.0);

  const StateTrajectory traj = short_run(p, 5e-3);
  const CheckReport rep = shell_flux(traj, p, shells, bank);
  REQUIRE(rep.find("natural_residual_consistency") != nullptr);
  INFO(rep.find("natural_residual_consistency")->value);
  CHECK(rep.find("natural_residual_consistency")->pass);
}

TEST_CASE("shell flux is stable under mesh refinement at matched depths") {
  const Problem& coarse = mixed_1d(50);
  const Problem& fine = mixed_1d(100);
  const double T = 5e-3;
  const StateTrajectory tc = short_run(coarse, T);
  const StateTrajectory tf = short_run(fine, T);
  // shells at tau = 0 and tau = 0.02 exist on both meshes
  const ShellFamily sc = build_shells(coarse.domain, 2);
  const ShellFamily sf = build_shells(fine.domain, 3);
  const TestBank bc = make_test_bank(coarse, T);
  const TestBank bf = make_test_bank(fine, T);
  const CheckReport rc = shell_flux(tc, coarse, sc, bc);
  const CheckReport rf = shell_flux(tf, fine, sf, bf);
  const double fc = rc.rows[0].value;  // flux_mag at tau = 0
  const double ff = rf.rows[0].value;
  CHECK(fc == doctest::Approx(ff).epsilon(0.35));
}

TEST_CASE("Dirichlet scaling: frozen linear field has slope 2") {
  const Problem& p = mixed_1d(100);
  Eigen::VectorXd linear(p.domain.node_count());
  for (int i = 0; i < p.domain.node_count(); ++i) linear(i) = p.domain.node_coords(i, 0);
  linear(0) = 0.0;
  StateTrajectory traj = frozen_field(p, linear);
  traj.config.s = 0.75;
  const CheckReport rep = dirichlet_scaling(traj, p);
  REQUIRE(rep.find("slope") != nullptr);
  CHECK(rep.find("slope")->value == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rep.find("fit_residual")->value < 0.05);
  // g(tau) = tau^2/3 for u = x
  for (const auto& row : rep.rows)
    if (row.quantity == "g")
      CHECK(row.value == doctest::Approx(row.key * row.key / 3.0).epsilon(0.1));
}

TEST_CASE("Dirichlet scaling: field vanishing near Gamma0 is flagged degenerate") {
  const Problem& p = mixed_1d(60);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.domain.node_count());
  for (int i = 0; i < p.domain.node_count(); ++i)
    v(i) = p.domain.node_coords(i, 0) > 0.5 ? 1.0 : 0.0;
  const StateTrajectory traj = frozen_field(p, v);
  const CheckReport rep = dirichlet_scaling(traj, p);
  CHECK(rep.find("degenerate_profile") != nullptr);
  CHECK(rep.pass);
}

TEST_CASE("initial trace errors obey the Cauchy-Schwarz rate bound") {
  const Problem& p = mixed_1d(60);
  const StateTrajectory traj = short_run(p, 3e-3);
  const TestBank bank = make_test_bank(p, 3e-3);
  const CheckReport rep = initial_trace(traj, p, bank);
  CHECK(rep.pass);
  REQUIRE(rep.find("mass_consistency") != nullptr);
  CHECK(rep.find("mass_consistency")->pass);
}

TEST_CASE("cutoff experiment matches the 1D closed form exactly") {
  const auto dom = build_domain(1, 400, {Side::left});
  const std::vector<double> ks = {0, 1, 2, 4, 8, 16, 32, 64, 128, 256};
  const CheckReport rep = cutoff_experiment(dom, ks);
  CHECK(rep.pass);
  for (const auto& row : rep.rows)
    if (row.quantity == "one_minus_xi_sq") {
      const double closed = row.key == 0.0 ? 1.0 : -std::expm1(-row.key) / row.key;
      CHECK(row.value == doctest::Approx(closed).epsilon(1e-10));
    }
  CHECK(rep.find("one_minus_xi_sq_decreasing")->pass);
  REQUIRE(rep.find("lemma_gradient_discrepancy_flag") != nullptr);
  // the gradient integral grows ~ k |Gamma| / 2, the flagged discrepancy
  CHECK(rep.find("lemma_gradient_discrepancy_flag")->value > 10.0);
}

TEST_CASE("cutoff experiment on a 2D mesh still decreases") {
  const auto dom = build_domain(2, 24, {Side::left});
  const CheckReport rep = cutoff_experiment(dom, {1, 4, 16, 64});
  CHECK(rep.find("one_minus_xi_sq_decreasing")->pass);
}

TEST_CASE("test bank: 20 deterministic tests vanishing on Gamma0 with theta(T) = 0") {
  const Problem& p = mixed_1d(40);
  const double T = 0.05;
  const TestBank bank = make_test_bank(p, T);
  CHECK(bank.tests.size() == 20);
  for (const auto& t : bank.tests) {
    for (int nd : p.domain.gamma0_nodes) CHECK(t.zeta(nd) == 0.0);
    CHECK(std::abs(t.theta(T)) < 1e-12);
    if (t.theta0_zero) CHECK(std::abs(t.theta(0.0)) < 1e-12);
    // theta_dot is the derivative of theta (central difference spot check)
    const double h = 1e-7 * T;
    const double mid = 0.37 * T;
    CHECK(t.theta_dot(mid) ==
          doctest::Approx((t.theta(mid + h) - t.theta(mid - h)) / (2 * h)).epsilon(1e-4));
  }
}
