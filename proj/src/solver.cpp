#include "fracpm/solver.hpp"

#include "fracpm/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracpm {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void SolverConfig::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0,1)");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in (0,1]");
  if (limit_replay) {
    if (delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
    if (picard_iters < 1)
      throw std::invalid_argument("limit replay (delta = 0) requires picard_iters >= 1");
  } else if (!(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must lie in (0,1]; delta = 0 needs limit_replay");
  }
  if (picard_iters < 0) throw std::invalid_argument("picard_iters must be >= 0");
  if (!(picard_tol > 0.0)) throw std::invalid_argument("picard_tol must be positive");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
}

void InitialData::validate(const DiscreteDomain& domain) const {
  if (values.size() != domain.node_count())
    throw std::invalid_argument("initial data size does not match the mesh");
  if (values.minCoeff() < 0.0)
    throw std::invalid_argument("initial data must be nonnegative");
  for (int i = 0; i < domain.node_count(); ++i)
    if (domain.is_gamma0(i) && values(i) != 0.0)
      throw std::invalid_argument("initial data must vanish on Gamma0");
}

namespace {

bool has_side(const DiscreteDomain& dom, Side s) {
  return std::find(dom.gamma0_sides.begin(), dom.gamma0_sides.end(), s) != dom.gamma0_sides.end();
}

double sine_factor(double x, bool lo_fixed, bool hi_fixed) {
  if (lo_fixed && hi_fixed) return std::sin(kPi * x);
  if (lo_fixed) return std::sin(kPi * x / 2.0);
  if (hi_fixed) return std::cos(kPi * x / 2.0);
  return 1.0;
}

double bump_factor(double x) {
  const double r = 2.0 * x - 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

}  // namespace

InitialData initial_profile(const DiscreteDomain& domain, const std::string& name) {
  InitialData data;
  data.values.resize(domain.node_count());
  const bool left = has_side(domain, Side::left);
  const bool right = has_side(domain, Side::right);
  const bool bottom = has_side(domain, Side::bottom);
  const bool top = has_side(domain, Side::top);

  for (int i = 0; i < domain.node_count(); ++i) {
    const double x = domain.node_coords(i, 0);
    const double y = domain.dimension == 2 ? domain.node_coords(i, 1) : 0.0;
    double v = 0.0;
    if (name == "zero") {
      v = 0.0;
    } else if (name == "sine_compatible") {
      v = sine_factor(x, left, right);
      if (domain.dimension == 2) v *= sine_factor(y, bottom, top);
    } else if (name == "bump") {
      v = bump_factor(x);
      if (domain.dimension == 2) v *= bump_factor(y);
    } else if (name == "plateau") {
      double d = std::numeric_limits<double>::infinity();
      if (left) d = std::min(d, x);
      if (right) d = std::min(d, 1.0 - x);
      if (domain.dimension == 2) {
        if (bottom) d = std::min(d, y);
        if (top) d = std::min(d, 1.0 - y);
      }
      const double t = std::min(1.0, d / 0.25);
      v = t * t * (3.0 - 2.0 * t);
    } else {
      throw std::invalid_argument("unknown initial profile '" + name + "'");
    }
    data.values(i) = std::max(0.0, v);
  }
  for (int nd : domain.gamma0_nodes) data.values(nd) = 0.0;
  return data;
}

double eta(double lambda, double mu) {
  if (lambda <= 0.0) return 0.0;
  if (mu > 0.0) return (lambda + mu) * std::log1p(lambda / mu) - lambda;
  return lambda * std::log(lambda);
}

double entropy_integral(const AssembledOperators& ops, const Eigen::VectorXd& u, double mu) {
  double s = 0.0;
  for (int i = 0; i < ops.n_nodes; ++i) s += ops.lumped_mass(i) * eta(u(i), mu);
  return s;
}

Eigen::VectorXd StateTrajectory::sample_state(double t) const {
  if (times.empty()) return {};
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const size_t hi = static_cast<size_t>(it - times.begin());
  const size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - w) * states[lo] + w * states[hi];
}

Eigen::VectorXd flux_form(const SpectralDecomposition& dec, const AssembledOperators& ops,
                          double s, double mu, const Eigen::VectorXd& u, long* clamp_count) {
  const Eigen::VectorXd w = k_s(dec, s, u);
  const Eigen::MatrixXd grad_w = kernels::element_gradients(ops, ops.elements, w);
  return kernels::flux_load(ops, ops.elements, u, grad_w, mu, clamp_count);
}

namespace {

Eigen::SparseMatrix<double> restrict_sparse(const Eigen::SparseMatrix<double>& m,
                                            const std::vector<int>& dofs) {
  std::vector<int> to_free(m.rows(), -1);
  for (size_t i = 0; i < dofs.size(); ++i) to_free[static_cast<size_t>(dofs[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(m.nonZeros()));
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      const int r = to_free[static_cast<size_t>(it.row())];
      const int c = to_free[static_cast<size_t>(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  Eigen::SparseMatrix<double> out(static_cast<int>(dofs.size()), static_cast<int>(dofs.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

ImexStepper::ImexStepper(const Problem& problem, const SolverConfig& config)
    : prob_(problem), cfg_(config) {
  mass_free_ = restrict_sparse(prob_.ops.mass, prob_.ops.free_dofs);
  stiff_free_ = restrict_sparse(prob_.ops.stiffness_a, prob_.ops.free_dofs);
}

const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>& ImexStepper::factor(double dt) {
  auto it = factors_.find(dt);
  if (it == factors_.end()) {
    Eigen::SparseMatrix<double> system = mass_free_ / dt;
    if (cfg_.delta > 0.0) system += cfg_.delta * stiff_free_;
    auto llt = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
    llt->compute(system);
    if (llt->info() != Eigen::Success)
      throw std::runtime_error("implicit system factorization failed");
    it = factors_.emplace(dt, std::move(llt)).first;
  }
  return *it->second;
}

Eigen::VectorXd ImexStepper::solve_free(double dt, const Eigen::VectorXd& rhs_full) {
  const auto& dofs = prob_.ops.free_dofs;
  Eigen::VectorXd rhs(static_cast<int>(dofs.size()));
  for (size_t i = 0; i < dofs.size(); ++i) rhs(static_cast<int>(i)) = rhs_full(dofs[i]);
  const Eigen::VectorXd x = factor(dt).solve(rhs);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(prob_.ops.n_nodes);
  for (size_t i = 0; i < dofs.size(); ++i) full(dofs[i]) = x(static_cast<int>(i));
  return full;
}

Eigen::VectorXd ImexStepper::step(const Eigen::VectorXd& u, double dt, long* clamp_count,
                                  int* picard_used) {
  long clamped = 0;
  auto load = [&](const Eigen::VectorXd& state) -> Eigen::VectorXd {
    if (cfg_.disable_transport) return Eigen::VectorXd::Zero(prob_.ops.n_nodes);
    return flux_form(prob_.dec, prob_.ops, cfg_.s, cfg_.mu, state, &clamped);
  };
  const Eigen::VectorXd mu_over_dt = (prob_.ops.mass * u) / dt;
  Eigen::VectorXd next = solve_free(dt, mu_over_dt - load(u));
  int used = 0;
  for (int m = 1; m <= cfg_.picard_iters; ++m) {
    const Eigen::VectorXd iterate = solve_free(dt, mu_over_dt - load(next));
    const double change = l2_norm(prob_.ops, iterate - next);
    next = iterate;
    used = m;
    if (change < cfg_.picard_tol) break;
  }
  if (clamp_count) *clamp_count = clamped;
  if (picard_used) *picard_used = used;
  return next;
}

Problem build_problem(int dimension, int resolution, const std::vector<Side>& gamma0,
                      const CoefficientFn& fn, MassMode mass_mode) {
  Problem p;
  p.domain = build_domain(dimension, resolution, gamma0);
  p.coeff = build_coefficients(p.domain, fn);
  p.ops = assemble(p.domain, p.coeff, mass_mode);
  p.dec = eigendecompose(p.ops);
  return p;
}

namespace {

StepRecord make_record(const Problem& prob, const SolverConfig& cfg, double t,
                       const Eigen::VectorXd& u, long clamp_count, int picard_used,
                       double dudt_norm) {
  const auto& ops = prob.ops;
  StepRecord rec;
  rec.t = t;
  rec.mass = integral(ops, u);
  rec.min_u = u.minCoeff();
  rec.max_u = u.maxCoeff();
  rec.entropy = entropy_integral(ops, u, cfg.mu);
  rec.clamp_count = clamp_count;
  rec.picard_used = picard_used;
  rec.dudt_norm = dudt_norm;

  const Eigen::VectorXd c = kernels::spectral_analysis(prob.dec.modes, ops.mass * u);
  const Eigen::ArrayXd lam = prob.dec.eigenvalues.array();
  rec.hs_energy = 0.5 * (lam.pow(-cfg.s) * c.array().square()).sum();

  const Eigen::VectorXd ksu =
      kernels::spectral_synthesis(prob.dec.modes, (lam.pow(-cfg.s) * c.array()).matrix());
  const Eigen::VectorXd hsu =
      kernels::spectral_synthesis(prob.dec.modes, (lam.pow(-cfg.s / 2.0) * c.array()).matrix());

  const Eigen::MatrixXd grad_u = kernels::element_gradients(ops, ops.elements, u);
  const Eigen::MatrixXd grad_ksu = kernels::element_gradients(ops, ops.elements, ksu);
  const Eigen::MatrixXd grad_hsu = kernels::element_gradients(ops, ops.elements, hsu);
  const Eigen::VectorXd avg = kernels::element_averages(ops.elements, u);

  const int n_elem = static_cast<int>(ops.elements.rows());
  Eigen::VectorXd w_inv(n_elem), w_plus(n_elem);
  for (int e = 0; e < n_elem; ++e) {
    const double w = cfg.mu + avg(e);
    w_inv(e) = w > 0.0 ? 1.0 / w : 0.0;
    w_plus(e) = std::max(w, 0.0);
  }
  rec.visc_rate = kernels::weighted_gradient_energy(ops, grad_u, w_inv, false);
  rec.hs_grad_rate =
      kernels::weighted_gradient_energy(ops, grad_hsu, Eigen::VectorXd::Ones(n_elem), false);
  rec.ks_weighted_rate = kernels::weighted_gradient_energy(ops, grad_ksu, w_plus, false);
  if (!cfg.disable_transport)
    rec.flux_norm = kernels::flux_load(ops, ops.elements, u, grad_ksu, cfg.mu).norm();
  return rec;
}

}  // namespace

StateTrajectory run(const InitialData& u0, const SolverConfig& config, const Problem& problem) {
  config.validate();
  u0.validate(problem.domain);

  StateTrajectory traj;
  traj.config = config;
  traj.u0_linf = u0.values.size() > 0 ? u0.values.maxCoeff() : 0.0;

  Eigen::VectorXd u = u0.values;
  if (config.compat_clip && traj.u0_linf > 0.0)
    u = u.cwiseMin(traj.u0_linf - config.mu).cwiseMax(0.0);

  const double tol_neg = config.tol_neg_factor * traj.u0_linf;
  const double tol_pos = config.tol_pos_factor * traj.u0_linf;
  // upper bound level: u + mu <= ||u0||_inf, degenerating to u <= 0 when the
  // data sits below mu
  const double upper = std::max(traj.u0_linf - config.mu, 0.0);

  ImexStepper stepper(problem, config);
  traj.times.push_back(0.0);
  traj.states.push_back(u);
  traj.ledger.push_back(make_record(problem, config, 0.0, u, 0, 0, 0.0));

  double t = 0.0;
  double dt = config.dt;
  int consecutive_halvings = 0;
  int step_idx = 0;
  const double horizon = config.t_end * (1.0 - 1e-12);

  while (t < horizon) {
    const double dt_step = std::min(dt, config.t_end - t);
    long clamp_count = 0;
    int picard_used = 0;
    const Eigen::VectorXd candidate = stepper.step(u, dt_step, &clamp_count, &picard_used);

    const bool finite = candidate.allFinite();
    bool violation = false;
    if (finite) {
      violation = candidate.minCoeff() < -tol_neg || candidate.maxCoeff() > upper + tol_pos;
    }

    if (!finite || (violation && config.adapt)) {
      const char* reason = finite ? "max principle excursion" : "non-finite state";
      if (!finite && !config.adapt) {
        traj.aborted = true;
        traj.abort_reason = std::string(reason) + " at t = " + std::to_string(t + dt_step);
        return traj;
      }
      if (consecutive_halvings >= config.max_halvings) {
        traj.aborted = true;
        traj.abort_reason = std::to_string(config.max_halvings) +
                            " consecutive dt halvings exhausted (" + reason + ")";
        return traj;
      }
      traj.adapt_log.push_back({step_idx, t, dt, dt / 2.0, reason});
      dt /= 2.0;
      ++consecutive_halvings;
      continue;
    }

    consecutive_halvings = 0;
    const double dudt = l2_norm(problem.ops, candidate - u) / dt_step;
    t += dt_step;
    u = candidate;
    ++step_idx;
    traj.times.push_back(t);
    traj.states.push_back(u);
    traj.ledger.push_back(make_record(problem, config, t, u, clamp_count, picard_used, dudt));
  }
  return traj;
}

SweepReport limit_sweep(const InitialData& u0, const SolverConfig& base,
                        const std::vector<double>& delta_grid,
                        const std::vector<double>& mu_grid, const Problem& problem, int jobs) {
  auto check_grid = [](const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] < grid[i - 1]))
        throw std::invalid_argument(std::string(name) + " grid must be strictly decreasing");
  };
  check_grid(delta_grid, "delta");
  check_grid(mu_grid, "mu");

  const int n_delta = static_cast<int>(delta_grid.size());
  const int n_total = n_delta + static_cast<int>(mu_grid.size());
  std::vector<SweepRun> runs(static_cast<size_t>(n_total));
  constexpr int kSamples = 101;
  std::vector<Eigen::MatrixXd> samples(static_cast<size_t>(n_total));
  if (jobs <= 0) jobs = omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (int r = 0; r < n_total; ++r) {
    SolverConfig cfg = base;
    if (r < n_delta) {
      cfg.delta = delta_grid[static_cast<size_t>(r)];
    } else {
      cfg.delta = delta_grid.back();
      cfg.mu = mu_grid[static_cast<size_t>(r - n_delta)];
    }
    SweepRun& out = runs[static_cast<size_t>(r)];
    out.delta = cfg.delta;
    out.mu = cfg.mu;
    try {
      const StateTrajectory traj = run(u0, cfg, problem);
      if (traj.aborted) {
        out.ok = false;
        out.error = traj.abort_reason;
      } else {
        const double m0 = traj.ledger.front().mass;
        double drift = 0.0, viol = 0.0;
        long clamp_total = 0;
        const double upper = std::max(traj.u0_linf - cfg.mu, 0.0);
        for (const auto& rec : traj.ledger) {
          if (m0 != 0.0) drift = std::max(drift, std::abs(rec.mass - m0) / std::abs(m0));
          viol = std::max({viol, -rec.min_u, rec.max_u - upper});
          clamp_total += rec.clamp_count;
        }
        out.zero_mass = m0 == 0.0;
        out.mass_drift = drift;
        out.linf_violation = std::max(0.0, viol);
        out.steps = traj.step_count() - 1;
        out.clamp_total = clamp_total;
        Eigen::MatrixXd s(problem.ops.n_nodes, kSamples);
        for (int j = 0; j < kSamples; ++j)
          s.col(j) = traj.sample_state(base.t_end * j / (kSamples - 1));
        samples[static_cast<size_t>(r)] = std::move(s);
      }
    } catch (const std::exception& ex) {
      out.ok = false;
      out.error = ex.what();
    }
  }

  const double dt_sample = base.t_end / (kSamples - 1);
  auto cauchy = [&](int a, int b) {
    double acc = 0.0;
    for (int j = 0; j < kSamples; ++j) {
      const double diff_sq = std::pow(
          l2_norm(problem.ops, samples[static_cast<size_t>(b)].col(j) -
                                   samples[static_cast<size_t>(a)].col(j)),
          2);
      acc += (j == 0 || j == kSamples - 1 ? 0.5 : 1.0) * diff_sq * dt_sample;
    }
    return std::sqrt(acc);
  };
  for (int r = 1; r < n_total; ++r) {
    if (r == n_delta) continue;  // leg boundary
    if (runs[static_cast<size_t>(r)].ok && runs[static_cast<size_t>(r - 1)].ok) {
      runs[static_cast<size_t>(r)].cauchy_diff = cauchy(r - 1, r);
      runs[static_cast<size_t>(r)].has_cauchy = true;
    }
  }

  SweepReport report;
  report.runs = std::move(runs);
  report.delta_leg_size = n_delta;
  return report;
}

}  // namespace fracpm
