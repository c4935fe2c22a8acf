#pragma once

#include "fracpm/spectral.hpp"

#include <Eigen/SparseCholesky>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fracpm {

/// Parameters of one regularized run. delta == 0 is accepted only together
/// with limit_replay (a pure-transport replay of the limit object, Picard
/// mandatory); everything else requires delta > 0.
struct SolverConfig {
  double s = 0.5;
  double delta = 1e-2;
  double mu = 1e-2;
  double dt = 1e-4;
  double t_end = 0.1;
  int picard_iters = 0;  // 0 = pure IMEX
  double picard_tol = 1e-10;
  bool adapt = true;  // max-principle-triggered dt halving
  MassMode mass_mode = MassMode::lumped;
  bool limit_replay = false;
  bool disable_transport = false;  // force B = 0 (linear-regime diagnostics)
  bool compat_clip = true;         // clip u0 at ||u0||_inf - mu
  double tol_neg_factor = 1e-8;    // undershoot tolerance, relative to ||u0||_inf
  double tol_pos_factor = 1e-6;    // overshoot tolerance
  int max_halvings = 10;

  void validate() const;  // throws std::invalid_argument
};

/// Nonnegative nodal initial data vanishing on Gamma0.
struct InitialData {
  Eigen::VectorXd values;
  void validate(const DiscreteDomain& domain) const;
};

/// Named profiles: sine_compatible, bump, plateau. All nonnegative and zero
/// on Gamma0.
InitialData initial_profile(const DiscreteDomain& domain, const std::string& name);

/// eta(lambda) = (lambda+mu) log(1+lambda/mu) - lambda for mu > 0; the mu -> 0
/// limit functional lambda log(lambda) when mu == 0. Negative lambda is
/// treated as 0.
double eta(double lambda, double mu);

/// Nodal quadrature of eta(u).
double entropy_integral(const AssembledOperators& ops, const Eigen::VectorXd& u, double mu);

/// Per-step ledger entry. Rates are instantaneous functionals of the state at
/// this row's time; diagnostics integrate them by trapezoid.
struct StepRecord {
  double t = 0.0;
  double mass = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double entropy = 0.0;
  double hs_energy = 0.0;  // 1/2 ||H_s u||^2_M
  long clamp_count = 0;    // clamped elements in the step producing this state
  double visc_rate = 0.0;        // int |grad u|^2 / (mu+u)
  double hs_grad_rate = 0.0;     // int |grad H_s u|^2
  double ks_weighted_rate = 0.0; // int (mu+u)|grad K_s u|^2
  double flux_norm = 0.0;        // |B(u)|_2
  double dudt_norm = 0.0;        // ||u^n - u^{n-1}||_M / dt
  int picard_used = 0;
};

struct AdaptEvent {
  int step = 0;
  double t = 0.0;
  double dt_before = 0.0;
  double dt_after = 0.0;
  std::string reason;
};

/// Immutable bundle of everything a run needs.
struct Problem {
  DiscreteDomain domain;
  CoefficientField coeff;
  AssembledOperators ops;
  SpectralDecomposition dec;
};

Problem build_problem(int dimension, int resolution, const std::vector<Side>& gamma0,
                      const CoefficientFn& fn, MassMode mass_mode);

struct StateTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<StepRecord> ledger;
  SolverConfig config;
  double u0_linf = 0.0;  // sup norm of the given (unclipped) profile
  std::vector<AdaptEvent> adapt_log;
  bool aborted = false;
  std::string abort_reason;

  int step_count() const { return static_cast<int>(times.size()); }
  /// Piecewise-linear interpolation in time (clamped to the recorded range).
  Eigen::VectorXd sample_state(double t) const;
};

/// Explicit nonlocal transport load: B_i = sum_e (mu + avg_e u) int_e
/// A grad(K_s u) . grad phi_i, with negative weights clamped at zero.
Eigen::VectorXd flux_form(const SpectralDecomposition& dec, const AssembledOperators& ops,
                          double s, double mu, const Eigen::VectorXd& u,
                          long* clamp_count = nullptr);

/// IMEX step engine: (M/dt + delta K_A) u^{n+1} = (M/dt) u^n - B(u^n) on the
/// free DOFs, Gamma0 held at zero, factorizations cached per dt. Optional
/// Picard tightening re-evaluates B at the latest iterate.
class ImexStepper {
 public:
  ImexStepper(const Problem& problem, const SolverConfig& config);
  Eigen::VectorXd step(const Eigen::VectorXd& u, double dt, long* clamp_count = nullptr,
                       int* picard_used = nullptr);

 private:
  const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>& factor(double dt);
  Eigen::VectorXd solve_free(double dt, const Eigen::VectorXd& rhs_full);

  const Problem& prob_;
  SolverConfig cfg_;
  Eigen::SparseMatrix<double> mass_free_;
  Eigen::SparseMatrix<double> stiff_free_;
  std::map<double, std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>> factors_;
};

/// Time-steps to t_end, populating the ledger at every accepted step.
/// Deterministic for fixed inputs.
StateTrajectory run(const InitialData& u0, const SolverConfig& config, const Problem& problem);

struct SweepRun {
  double delta = 0.0;
  double mu = 0.0;
  double mass_drift = 0.0;      // max_t |m(t)-m(0)|/m(0), 0 (flagged) for zero data
  double linf_violation = 0.0;  // max of undershoot/overshoot excursions
  double cauchy_diff = 0.0;     // L2(Omega_T) distance to the previous run in the leg
  bool has_cauchy = false;
  bool ok = true;
  std::string error;
  bool zero_mass = false;
  int steps = 0;
  long clamp_total = 0;
};

struct SweepReport {
  std::vector<SweepRun> runs;  // delta leg then mu leg
  int delta_leg_size = 0;
};

/// Fixes mu = base.mu and runs over delta_grid, then fixes the smallest delta
/// and runs over mu_grid. Runs execute in an OpenMP worker pool of `jobs`
/// threads; individual failures are recorded and the sweep continues.
SweepReport limit_sweep(const InitialData& u0, const SolverConfig& base,
                        const std::vector<double>& delta_grid,
                        const std::vector<double>& mu_grid, const Problem& problem, int jobs);

}  // namespace fracpm
