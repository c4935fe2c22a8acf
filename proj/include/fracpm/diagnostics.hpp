#pragma once

#include "fracpm/solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fracpm {

struct CheckRow {
  std::string quantity;
  double key = 0.0;  // tau, t or k, depending on the check
  double value = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct CheckReport {
  std::string check;
  std::vector<CheckRow> rows;
  bool pass = true;
  std::string note;

  void add(const std::string& quantity, double key, double value, double bound, bool row_pass,
           bool gating = true);
  const CheckRow* find(const std::string& quantity) const;
};

// Every check below recomputes its quantities from the stored states through
// the serial reference kernels; none of them trusts the solver's ledger.

/// Excursions beyond 0 <= u + mu <= ||u0||_inf, against the run tolerances.
CheckReport check_bounds(const StateTrajectory& traj);

/// Relative mass drift per step. Trend-based; never gates on its own.
CheckReport check_mass(const StateTrajectory& traj);

/// Entropy ledger: int eta(u(t)) + Lambda1 delta int int |grad u|^2/(mu+u)
/// + Lambda1 int int |grad H_s u|^2 <= int eta(u0) + slack(dt), plus the
/// closed-form gradient bound delta ||grad u||^2_{L2(Omega_T)} <=
/// ||u0||_inf eta(||u0||_inf) |Omega| / Lambda1.
CheckReport check_first_energy(const StateTrajectory& traj, const Problem& problem,
                               double slack_constant = 10.0);

/// 1/2 ||H_s u(t2)||^2 + Lambda1 int int (mu+u)|grad K_s u|^2 <=
/// 1/2 ||H_s u(t1)||^2 + slack(dt) over sampled step pairs.
CheckReport check_second_energy(const StateTrajectory& traj, const Problem& problem,
                                double slack_constant = 10.0);

/// Solver ledger vs. the independent recomputation, 1e-12 agreement.
CheckReport check_ledger_consistency(const StateTrajectory& traj, const Problem& problem);

/// One separable space-time test phi(t,x) = theta(t) zeta(x), theta(T) = 0.
struct SpaceTimeTest {
  std::string name;
  Eigen::VectorXd zeta;  // nodal, zero on Gamma0
  std::function<double(double)> theta;
  std::function<double(double)> theta_dot;
  bool theta0_zero = false;
};

struct TestBank {
  std::vector<SpaceTimeTest> tests;
};

/// Deterministic bank: low eigenmodes and polynomial bumps crossed with
/// smooth time windows built from mollified Heaviside ramps.
TestBank make_test_bank(const Problem& problem, double t_end, int n_space = 5, int n_time = 4);

/// Quintic smoothstep ramp H (the mollified Heaviside H_j profile) and its
/// density H' on [0,1].
double smooth_ramp(double x);
double smooth_ramp_dot(double x);

/// Residual of the weak identity
///   iint u (dt phi - A grad K_s u . grad phi) + int u0 phi(0) = 0
/// over the bank, evaluated on two independent code paths.
CheckReport weak_residual(const StateTrajectory& traj, const Problem& problem,
                          const TestBank& bank);

/// Time-integrated transport flux through the nested Gamma1 shells; trend over
/// the last three shells, plus the tau = 0 natural-residual consistency in 1D.
CheckReport shell_flux(const StateTrajectory& traj, const Problem& problem,
                       const ShellFamily& shells, const TestBank& bank);

/// g(tau) = (1/tau) int_0^tau int_{Gamma0} |u|^2 on nested boundary layers of
/// the time-averaged squared state, with a log-log slope fit.
CheckReport dirichlet_scaling(const StateTrajectory& traj, const Problem& problem);

/// |int u(t) zeta - int u0 zeta| over the first steps, bounded through the
/// recomputed rate ||du/dt||_M.
CheckReport initial_trace(const StateTrajectory& traj, const Problem& problem,
                          const TestBank& bank);

/// xi_k = 1 - exp(-k h): int |1 - xi_k|^2 must decrease toward 0 (1D closed
/// form (1-e^{-k})/k); the gradient integral trend is reported together with
/// the discrepancy flag for its claimed vanishing limit.
CheckReport cutoff_experiment(const DiscreteDomain& domain, const std::vector<double>& k_list);

}  // namespace fracpm
