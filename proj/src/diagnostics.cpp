#include "fracpm/diagnostics.hpp"

#include "fracpm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fracpm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// entropy density written through the log-difference form, on purpose a
// different expression than the solver's log1p route
double eta_alt(double lambda, double mu) {
  if (lambda <= 0.0) return 0.0;
  if (mu > 0.0) return (lambda + mu) * (std::log(lambda + mu) - std::log(mu)) - lambda;
  return lambda * std::log(lambda);
}

Eigen::VectorXd ref_project(const SpectralDecomposition& dec, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  for (int i = 0; i < static_cast<int>(out.size()); ++i)
    if (dec.gamma0_mask[static_cast<size_t>(i)]) out(i) = 0.0;
  return out;
}

Eigen::VectorXd ref_coeffs(const SpectralDecomposition& dec, const Eigen::VectorXd& v) {
  return ref::spectral_analysis(dec.modes, dec.mass * ref_project(dec, v));
}

Eigen::VectorXd ref_apply(const SpectralDecomposition& dec, double p, const Eigen::VectorXd& v) {
  const Eigen::VectorXd c = ref_coeffs(dec, v);
  const Eigen::VectorXd d = dec.eigenvalues.array().pow(p) * c.array();
  return ref::spectral_synthesis(dec.modes, d);
}

// Every instantaneous ledger quantity of one state, recomputed on the
// reference path.
struct StateRates {
  double mass = 0.0;
  double entropy = 0.0;
  double hs_energy = 0.0;
  double visc_rate = 0.0;
  double hs_grad_rate = 0.0;
  double ks_weighted_rate = 0.0;
  double flux_norm = 0.0;
  double grad_energy = 0.0;  // int |grad u|^2, for the Corollary bound
};

StateRates recompute_rates(const Problem& prob, const SolverConfig& cfg,
                           const Eigen::VectorXd& u) {
  const auto& ops = prob.ops;
  StateRates r;
  for (int i = 0; i < ops.n_nodes; ++i) r.mass += ops.lumped_mass(i) * u(i);
  for (int i = 0; i < ops.n_nodes; ++i) r.entropy += ops.lumped_mass(i) * eta_alt(u(i), cfg.mu);

  const Eigen::VectorXd c = ref_coeffs(prob.dec, u);
  const Eigen::ArrayXd lam = prob.dec.eigenvalues.array();
  r.hs_energy = 0.5 * (lam.pow(-cfg.s) * c.array().square()).sum();

  const Eigen::VectorXd ksu =
      ref::spectral_synthesis(prob.dec.modes, (lam.pow(-cfg.s) * c.array()).matrix());
  const Eigen::VectorXd hsu =
      ref::spectral_synthesis(prob.dec.modes, (lam.pow(-cfg.s / 2.0) * c.array()).matrix());

  const Eigen::MatrixXd grad_u = ref::element_gradients(prob.domain, u);
  const Eigen::MatrixXd grad_ksu = ref::element_gradients(prob.domain, ksu);
  const Eigen::MatrixXd grad_hsu = ref::element_gradients(prob.domain, hsu);

  const int n_elem = prob.domain.element_count();
  const int nv = prob.domain.dimension + 1;
  Eigen::VectorXd w_inv(n_elem), w_plus(n_elem);
  for (int e = 0; e < n_elem; ++e) {
    double avg = 0.0;
    for (int m = 0; m < nv; ++m) avg += u(prob.domain.elements(e, m));
    const double w = cfg.mu + avg / nv;
    w_inv(e) = w > 0.0 ? 1.0 / w : 0.0;
    w_plus(e) = std::max(w, 0.0);
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_elem);
  r.visc_rate = ref::weighted_gradient_energy(ops, grad_u, w_inv, false);
  r.hs_grad_rate = ref::weighted_gradient_energy(ops, grad_hsu, ones, false);
  r.ks_weighted_rate = ref::weighted_gradient_energy(ops, grad_ksu, w_plus, false);
  r.grad_energy = ref::weighted_gradient_energy(ops, grad_u, ones, false);
  if (!cfg.disable_transport)
    r.flux_norm = ref::flux_load(ops, prob.domain, u, grad_ksu, cfg.mu).norm();
  return r;
}

std::vector<StateRates> recompute_all(const StateTrajectory& traj, const Problem& prob) {
  std::vector<StateRates> rates(traj.states.size());
  for (size_t n = 0; n < traj.states.size(); ++n)
    rates[n] = recompute_rates(prob, traj.config, traj.states[n]);
  return rates;
}

// cumulative trapezoid of a rate sequence on the trajectory times
std::vector<double> cumulative_trapz(const std::vector<double>& t, const std::vector<double>& v) {
  std::vector<double> acc(t.size(), 0.0);
  for (size_t n = 1; n < t.size(); ++n)
    acc[n] = acc[n - 1] + 0.5 * (v[n] + v[n - 1]) * (t[n] - t[n - 1]);
  return acc;
}

std::vector<int> sample_indices(int count, int wanted) {
  std::vector<int> idx;
  if (count <= 0) return idx;
  const int m = std::min(count, wanted);
  for (int j = 0; j < m; ++j) idx.push_back(static_cast<int>(std::round(
      static_cast<double>(j) * (count - 1) / std::max(1, m - 1))));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace

void CheckReport::add(const std::string& quantity, double key, double value, double bound,
                      bool row_pass, bool gating) {
  rows.push_back({quantity, key, value, bound, row_pass});
  if (gating) pass = pass && row_pass;
}

const CheckRow* CheckReport::find(const std::string& quantity) const {
  for (const auto& r : rows)
    if (r.quantity == quantity) return &r;
  return nullptr;
}

CheckReport check_bounds(const StateTrajectory& traj) {
  CheckReport rep;
  rep.check = "bounds";
  const auto& cfg = traj.config;
  // u + mu <= ||u0||_inf, degenerating to u <= 0 for data below mu
  const double upper = std::max(traj.u0_linf - cfg.mu, 0.0);
  double undershoot = 0.0, overshoot = 0.0;
  for (const auto& s : traj.states) {
    undershoot = std::max(undershoot, -s.minCoeff());
    overshoot = std::max(overshoot, s.maxCoeff() - upper);
  }
  undershoot = std::max(0.0, undershoot);
  overshoot = std::max(0.0, overshoot);
  const double tol_neg = cfg.tol_neg_factor * traj.u0_linf;
  const double tol_pos = cfg.tol_pos_factor * traj.u0_linf;
  rep.add("undershoot", 0.0, undershoot, tol_neg, undershoot <= tol_neg);
  rep.add("overshoot", 0.0, overshoot, tol_pos, overshoot <= tol_pos);
  rep.add("adapt_events", 0.0, static_cast<double>(traj.adapt_log.size()), kInf, true, false);
  if (!traj.adapt_log.empty()) rep.note = "dt was halved " +
                                          std::to_string(traj.adapt_log.size()) + " time(s)";
  return rep;
}

CheckReport check_mass(const StateTrajectory& traj) {
  CheckReport rep;
  rep.check = "mass";
  const double m0 = traj.ledger.front().mass;
  if (m0 == 0.0) {
    rep.add("max_drift", 0.0, 0.0, kInf, true);
    rep.note = "zero initial mass; drift 0/0 treated as 0";
    return rep;
  }
  double max_drift = 0.0;
  for (size_t n = 0; n < traj.ledger.size(); ++n) {
    const double drift = std::abs(traj.ledger[n].mass - m0) / std::abs(m0);
    max_drift = std::max(max_drift, drift);
    rep.add("drift", traj.times[n], drift, kInf, true, false);
  }
  rep.add("max_drift", traj.times.back(), max_drift, kInf, true);
  rep.note = "drift is acceptance-tested as a (delta,mu) -> 0 trend, not per run";
  return rep;
}

CheckReport check_first_energy(const StateTrajectory& traj, const Problem& problem,
                               double slack_constant) {
  CheckReport rep;
  rep.check = "first_energy";
  const auto& cfg = traj.config;
  const double lambda1 = problem.ops.lambda1;
  const auto rates = recompute_all(traj, problem);

  std::vector<double> visc(rates.size()), hsg(rates.size()), grad(rates.size());
  for (size_t n = 0; n < rates.size(); ++n) {
    visc[n] = rates[n].visc_rate;
    hsg[n] = rates[n].hs_grad_rate;
    grad[n] = rates[n].grad_energy;
  }
  const auto d_visc = cumulative_trapz(traj.times, visc);
  const auto d_hs = cumulative_trapz(traj.times, hsg);
  const auto d_grad = cumulative_trapz(traj.times, grad);

  const double eta0 = rates.front().entropy;
  double worst_margin = -kInf;  // excess - slack, must stay <= 0
  double max_entropy_increase = 0.0;
  double final_slack = 0.0;
  for (size_t n = 0; n < rates.size(); ++n) {
    const double dissipation = lambda1 * (cfg.delta * d_visc[n] + d_hs[n]);
    const double excess = rates[n].entropy + dissipation - eta0;
    const double slack = slack_constant * cfg.dt * std::max(eta0 + dissipation, 0.0);
    final_slack = slack;
    worst_margin = std::max(worst_margin, excess - slack);
    if (n > 0)
      max_entropy_increase = std::max(max_entropy_increase,
                                      rates[n].entropy - rates[n - 1].entropy);
  }
  for (int n : sample_indices(static_cast<int>(rates.size()), 11)) {
    const double dissipation = lambda1 * (cfg.delta * d_visc[static_cast<size_t>(n)] +
                                          d_hs[static_cast<size_t>(n)]);
    rep.add("lhs_minus_eta0", traj.times[static_cast<size_t>(n)],
            rates[static_cast<size_t>(n)].entropy + dissipation - eta0, final_slack, true, false);
  }
  rep.add("within_slack_margin", traj.times.back(), worst_margin, 0.0, worst_margin <= 0.0);
  rep.add("slack_final", traj.times.back(), final_slack, kInf, true, false);
  rep.add("entropy_max_increase", traj.times.back(), max_entropy_increase, final_slack,
          max_entropy_increase <= final_slack);

  // delta ||grad u||^2_{L2(Omega_T)} <= ||u0||_inf eta(||u0||_inf) |Omega| / Lambda1
  const double volume = problem.ops.element_volumes.sum();
  const double cor_lhs = cfg.delta * d_grad.back();
  const double cor_rhs =
      traj.u0_linf * eta(traj.u0_linf, cfg.mu) * volume / lambda1 + 1e-300;
  rep.add("corollary_grad_bound", traj.times.back(), cor_lhs, cor_rhs, cor_lhs <= cor_rhs);
  return rep;
}

CheckReport check_second_energy(const StateTrajectory& traj, const Problem& problem,
                                double slack_constant) {
  CheckReport rep;
  rep.check = "second_energy";
  const auto& cfg = traj.config;
  const double lambda1 = problem.ops.lambda1;
  const auto rates = recompute_all(traj, problem);

  std::vector<double> ksw(rates.size());
  for (size_t n = 0; n < rates.size(); ++n) ksw[n] = rates[n].ks_weighted_rate;
  const auto d_ksw = cumulative_trapz(traj.times, ksw);

  const auto idx = sample_indices(static_cast<int>(rates.size()), 10);
  double worst_margin = -kInf;
  double slack_ref = 0.0;
  for (size_t a = 0; a < idx.size(); ++a)
    for (size_t b = a + 1; b < idx.size(); ++b) {
      const size_t na = static_cast<size_t>(idx[a]), nb = static_cast<size_t>(idx[b]);
      const double dissipation = lambda1 * (d_ksw[nb] - d_ksw[na]);
      const double lhs = rates[nb].hs_energy + dissipation;
      const double slack =
          slack_constant * cfg.dt * std::max(rates[na].hs_energy + dissipation, 0.0);
      slack_ref = std::max(slack_ref, slack);
      worst_margin = std::max(worst_margin, lhs - rates[na].hs_energy - slack);
    }
  double max_hs_increase = 0.0;
  for (size_t n = 1; n < rates.size(); ++n)
    max_hs_increase = std::max(max_hs_increase, rates[n].hs_energy - rates[n - 1].hs_energy);

  for (int n : sample_indices(static_cast<int>(rates.size()), 11))
    rep.add("hs_energy", traj.times[static_cast<size_t>(n)],
            rates[static_cast<size_t>(n)].hs_energy, kInf, true, false);
  rep.add("pair_violation_margin", traj.times.back(), worst_margin, 0.0, worst_margin <= 0.0);
  rep.add("slack_ref", traj.times.back(), slack_ref, kInf, true, false);
  rep.add("hs_energy_max_increase", traj.times.back(), max_hs_increase, slack_ref,
          max_hs_increase <= slack_ref);
  return rep;
}

CheckReport check_ledger_consistency(const StateTrajectory& traj, const Problem& problem) {
  CheckReport rep;
  rep.check = "ledger_consistency";
  const auto& cfg = traj.config;
  double worst = 0.0;
  auto compare = [&worst](double a, double b) {
    worst = std::max(worst, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
  };
  for (size_t n = 0; n < traj.states.size(); ++n) {
    const StateRates r = recompute_rates(problem, cfg, traj.states[n]);
    const StepRecord& led = traj.ledger[n];
    compare(led.mass, r.mass);
    compare(led.entropy, r.entropy);
    compare(led.hs_energy, r.hs_energy);
    compare(led.visc_rate, r.visc_rate);
    compare(led.hs_grad_rate, r.hs_grad_rate);
    compare(led.ks_weighted_rate, r.ks_weighted_rate);
    compare(led.flux_norm, r.flux_norm);
    compare(led.min_u, traj.states[n].minCoeff());
    compare(led.max_u, traj.states[n].maxCoeff());
    if (n > 0) {
      const double dt = traj.times[n] - traj.times[n - 1];
      const double rate = l2_norm(problem.ops, traj.states[n] - traj.states[n - 1]) / dt;
      compare(led.dudt_norm, rate);
    }
  }
  rep.add("max_relative_disagreement", 0.0, worst, 1e-12, worst <= 1e-12);
  return rep;
}

double smooth_ramp(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smooth_ramp_dot(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

namespace {

Eigen::VectorXd polynomial_bump(const Problem& prob, int power) {
  const auto& dom = prob.domain;
  auto has = [&dom](Side s) {
    return std::find(dom.gamma0_sides.begin(), dom.gamma0_sides.end(), s) !=
           dom.gamma0_sides.end();
  };
  Eigen::VectorXd zeta(dom.node_count());
  for (int i = 0; i < dom.node_count(); ++i) {
    const double x = dom.node_coords(i, 0);
    double v = 1.0;
    if (has(Side::left)) v *= std::pow(x, power);
    if (has(Side::right)) v *= std::pow(1.0 - x, power);
    if (dom.dimension == 2) {
      const double y = dom.node_coords(i, 1);
      if (has(Side::bottom)) v *= std::pow(y, power);
      if (has(Side::top)) v *= std::pow(1.0 - y, power);
    }
    zeta(i) = v;
  }
  const double peak = zeta.cwiseAbs().maxCoeff();
  if (peak > 0.0) zeta /= peak;
  for (int nd : dom.gamma0_nodes) zeta(nd) = 0.0;
  return zeta;
}

}  // namespace

TestBank make_test_bank(const Problem& problem, double t_end, int n_space, int n_time) {
  TestBank bank;
  std::vector<std::pair<std::string, Eigen::VectorXd>> spatial;
  const int n_modes = problem.dec.mode_count();
  for (int k = 0; k < std::min(3, n_modes) && static_cast<int>(spatial.size()) < n_space; ++k)
    spatial.emplace_back("phi" + std::to_string(k + 1), problem.dec.modes.col(k));
  if (static_cast<int>(spatial.size()) < n_space)
    spatial.emplace_back("poly1", polynomial_bump(problem, 1));
  if (static_cast<int>(spatial.size()) < n_space)
    spatial.emplace_back("poly2", polynomial_bump(problem, 2));

  struct Window {
    std::string name;
    std::function<double(double)> theta, theta_dot;
    bool zero_at_start;
  };
  const double T = t_end;
  std::vector<Window> windows = {
      {"rampoff",
       [T](double t) { return 1.0 - smooth_ramp((t - 0.4 * T) / (0.4 * T)); },
       [T](double t) { return -smooth_ramp_dot((t - 0.4 * T) / (0.4 * T)) / (0.4 * T); }, false},
      {"window",
       [T](double t) {
         return smooth_ramp(t / (0.3 * T)) - smooth_ramp((t - 0.5 * T) / (0.3 * T));
       },
       [T](double t) {
         return (smooth_ramp_dot(t / (0.3 * T)) - smooth_ramp_dot((t - 0.5 * T) / (0.3 * T))) /
                (0.3 * T);
       },
       true},
      {"quad",
       [T](double t) { return (1.0 - t / T) * (1.0 - t / T); },
       [T](double t) { return -2.0 * (1.0 - t / T) / T; }, false},
      {"bump",
       [T](double t) {
         const double r = t / T;
         return 16.0 * r * r * (1.0 - r) * (1.0 - r);
       },
       [T](double t) {
         const double r = t / T;
         return 16.0 * (2.0 * r * (1.0 - r) * (1.0 - r) - 2.0 * r * r * (1.0 - r)) / T;
       },
       true},
  };
  if (n_time < static_cast<int>(windows.size()))
    windows.resize(static_cast<size_t>(std::max(1, n_time)));

  for (const auto& w : windows)
    for (const auto& [zname, zeta] : spatial) {
      SpaceTimeTest t;
      t.name = zname + "*" + w.name;
      t.zeta = zeta;
      t.theta = w.theta;
      t.theta_dot = w.theta_dot;
      t.theta0_zero = w.zero_at_start;
      bank.tests.push_back(std::move(t));
    }
  return bank;
}

CheckReport weak_residual(const StateTrajectory& traj, const Problem& problem,
                          const TestBank& bank) {
  CheckReport rep;
  rep.check = "weak_residual";
  const auto& ops = problem.ops;
  const auto& cfg = traj.config;
  const size_t n_states = traj.states.size();
  const size_t n_tests = bank.tests.size();

  // per-test precomputation
  std::vector<Eigen::VectorXd> m_zeta(n_tests), c_zeta(n_tests);
  for (size_t j = 0; j < n_tests; ++j) {
    m_zeta[j] = ops.mass * bank.tests[j].zeta;
    c_zeta[j] = ref_coeffs(problem.dec, bank.tests[j].zeta);
  }

  // integrand samples per (state, test) on both code paths
  Eigen::MatrixXd ia(n_states, n_tests), ib(n_states, n_tests);
  for (size_t n = 0; n < n_states; ++n) {
    const Eigen::VectorXd& u = traj.states[n];
    const double t = traj.times[n];

    const Eigen::VectorXd ksu_a = k_s(problem.dec, cfg.s, u);
    const Eigen::MatrixXd grads_a = kernels::element_gradients(ops, ops.elements, ksu_a);
    const Eigen::VectorXd b0_a = kernels::flux_load(ops, ops.elements, u, grads_a, 0.0);

    const Eigen::VectorXd c_u = ref_coeffs(problem.dec, u);
    const Eigen::VectorXd ksu_b = ref::spectral_synthesis(
        problem.dec.modes,
        (problem.dec.eigenvalues.array().pow(-cfg.s) * c_u.array()).matrix());
    const Eigen::MatrixXd grads_b = ref::element_gradients(problem.domain, ksu_b);
    const Eigen::VectorXd b0_b = ref::flux_load(ops, problem.domain, u, grads_b, 0.0);

    for (size_t j = 0; j < n_tests; ++j) {
      const auto& test = bank.tests[j];
      const double th = test.theta(t), thd = test.theta_dot(t);
      ia(static_cast<int>(n), static_cast<int>(j)) =
          thd * u.dot(m_zeta[j]) - th * b0_a.dot(test.zeta);
      ib(static_cast<int>(n), static_cast<int>(j)) =
          thd * c_u.dot(c_zeta[j]) - th * b0_b.dot(test.zeta);
    }
  }

  double max_r = 0.0, max_diff = 0.0;
  const Eigen::VectorXd c_u0 = ref_coeffs(problem.dec, traj.states.front());
  for (size_t j = 0; j < n_tests; ++j) {
    const auto& test = bank.tests[j];
    double ra = 0.0, rb = 0.0;
    for (size_t n = 1; n < n_states; ++n) {
      const double dt = traj.times[n] - traj.times[n - 1];
      ra += 0.5 * dt * (ia(static_cast<int>(n), static_cast<int>(j)) +
                        ia(static_cast<int>(n - 1), static_cast<int>(j)));
      rb += 0.5 * dt * (ib(static_cast<int>(n), static_cast<int>(j)) +
                        ib(static_cast<int>(n - 1), static_cast<int>(j)));
    }
    const double th0 = test.theta(0.0);
    ra += th0 * traj.states.front().dot(m_zeta[j]);
    rb += th0 * c_u0.dot(c_zeta[j]);
    rep.add(test.name, static_cast<double>(j), std::abs(ra), kInf, true, false);
    max_r = std::max(max_r, std::abs(ra));
    max_diff = std::max(max_diff, std::abs(ra - rb));
  }
  rep.add("max_abs_residual", 0.0, max_r, kInf, true, false);
  rep.add("double_evaluation_max_diff", 0.0, max_diff, 1e-10, max_diff <= 1e-10);
  return rep;
}

CheckReport shell_flux(const StateTrajectory& traj, const Problem& problem,
                       const ShellFamily& shells, const TestBank& bank) {
  CheckReport rep;
  rep.check = "shell_flux";
  const auto& ops = problem.ops;
  const auto& cfg = traj.config;
  const size_t n_states = traj.states.size();
  const size_t n_shells = shells.shells.size();
  const int nv = problem.domain.dimension + 1;

  // Phi[k](n) = instantaneous flux functional through shell k for each test's
  // spatial factor, evaluated at the parent Gamma1 trace position.
  std::vector<Eigen::MatrixXd> phi(n_shells);
  for (size_t k = 0; k < n_shells; ++k)
    phi[k] = Eigen::MatrixXd::Zero(static_cast<int>(n_states),
                                   static_cast<int>(bank.tests.size()));

  for (size_t n = 0; n < n_states; ++n) {
    const Eigen::VectorXd& u = traj.states[n];
    const Eigen::VectorXd ksu = ref_apply(problem.dec, -cfg.s, u);
    const Eigen::MatrixXd grads = ref::element_gradients(problem.domain, ksu);
    for (size_t k = 0; k < n_shells; ++k) {
      for (size_t f = 0; f < shells.shells[k].size(); ++f) {
        const Facet& facet = shells.shells[k][f];
        const Facet& parent = shells.shells[0][f];
        const int e = facet.adjacent_element;
        double avg = 0.0;
        for (int m = 0; m < nv; ++m) avg += u(ops.elements(e, m));
        const double weight = cfg.mu + avg / nv;
        const Eigen::Vector2d g = grads.row(e).transpose();
        const double normal_flux =
            weight * (ops.element_coeff[static_cast<size_t>(e)] * g).dot(facet.normal);
        for (size_t j = 0; j < bank.tests.size(); ++j) {
          const Eigen::VectorXd& zeta = bank.tests[j].zeta;
          double gamma_int = 0.0;
          if (parent.nodes[1] < 0)
            gamma_int = zeta(parent.nodes[0]) * facet.measure;
          else
            gamma_int = 0.5 * (zeta(parent.nodes[0]) + zeta(parent.nodes[1])) * facet.measure;
          phi[k](static_cast<int>(n), static_cast<int>(j)) += normal_flux * gamma_int;
        }
      }
    }
  }

  std::vector<double> flux_mag(n_shells, 0.0);
  for (size_t k = 0; k < n_shells; ++k) {
    for (size_t j = 0; j < bank.tests.size(); ++j) {
      double acc = 0.0;
      for (size_t n = 1; n < n_states; ++n) {
        const double dt = traj.times[n] - traj.times[n - 1];
        const double tn = traj.times[n], tp = traj.times[n - 1];
        acc += 0.5 * dt *
               (bank.tests[j].theta(tn) * phi[k](static_cast<int>(n), static_cast<int>(j)) +
                bank.tests[j].theta(tp) * phi[k](static_cast<int>(n - 1), static_cast<int>(j)));
      }
      flux_mag[k] = std::max(flux_mag[k], std::abs(acc));
    }
    rep.add("flux_mag", shells.tau_values[k], flux_mag[k], kInf, true, false);
  }

  if (n_shells >= 3) {
    // |flux| non-increasing as tau decreases over the last three shells
    const double f0 = flux_mag[0], f1 = flux_mag[1], f2 = flux_mag[2];
    const double margin = std::max(f0 - f1, f1 - f2);
    rep.add("last3_nonincreasing_margin", shells.tau_values[2], margin, 0.0, margin <= 0.0,
            false);
  }

  // tau = 0 flux vs. the assembled natural-boundary residual of the step
  // equation (exact in 1D for the pure IMEX scheme).
  if (problem.domain.dimension == 1 && cfg.picard_iters == 0 && !cfg.disable_transport &&
      n_states >= 2) {
    double worst = 0.0;
    const auto idx = sample_indices(static_cast<int>(n_states) - 1, 8);
    for (int n : idx) {
      const size_t sn = static_cast<size_t>(n);
      const Eigen::VectorXd& u = traj.states[sn];
      const Eigen::VectorXd& unext = traj.states[sn + 1];
      const double dt = traj.times[sn + 1] - traj.times[sn];
      const Eigen::VectorXd ksu = ref_apply(problem.dec, -cfg.s, u);
      const Eigen::MatrixXd grads = ref::element_gradients(problem.domain, ksu);
      const Eigen::VectorXd mdu = ops.mass * (unext - u) / dt;
      const Eigen::VectorXd kau = ops.stiffness_a * unext;
      for (const Facet& facet : shells.shells[0]) {
        const int e = facet.adjacent_element;
        double avg = 0.0;
        for (int m = 0; m < nv; ++m) avg += u(ops.elements(e, m));
        const double weight = std::max(cfg.mu + avg / nv, 0.0);
        const double flux0 =
            weight * (ops.element_coeff[static_cast<size_t>(e)] *
                      grads.row(e).transpose())
                         .dot(facet.normal);
        const int node = facet.nodes[0];
        const double residual = -mdu(node) - cfg.delta * kau(node);
        worst = std::max(worst, std::abs(flux0 - residual) /
                                    std::max({1.0, std::abs(flux0), std::abs(residual)}));
      }
    }
    rep.add("natural_residual_consistency", 0.0, worst, 1e-10, worst <= 1e-10);
  }
  return rep;
}

CheckReport dirichlet_scaling(const StateTrajectory& traj, const Problem& problem) {
  CheckReport rep;
  rep.check = "dirichlet_scaling";
  const auto& dom = problem.domain;
  const double s = traj.config.s;
  const double t_total = traj.times.back() - traj.times.front();

  // time-average of u^2 per node
  Eigen::VectorXd q = Eigen::VectorXd::Zero(dom.node_count());
  if (traj.states.size() == 1 || t_total <= 0.0) {
    q = traj.states.front().array().square();
  } else {
    for (size_t n = 1; n < traj.states.size(); ++n) {
      const double dt = traj.times[n] - traj.times[n - 1];
      q += 0.5 * dt *
           (traj.states[n].array().square() + traj.states[n - 1].array().square()).matrix();
    }
    q /= t_total;
  }

  // skip the first two layers: the collar quadrature is O(1/m^2)-biased there
  int first_layer = 3;
  int layers = std::min(first_layer + 9, dom.resolution / 2);
  if (layers - first_layer + 1 < 4) first_layer = 1;
  layers = std::max(layers, std::min(4, dom.resolution / 2));
  const double h = dom.mesh_width();

  // G(l) = integral of q over the Gamma0-side offset at depth l*h
  std::vector<double> g_layer(static_cast<size_t>(layers) + 1, 0.0);
  for (Side side : dom.gamma0_sides) {
    for (int l = 0; l <= layers; ++l) {
      double acc = 0.0;
      if (dom.dimension == 1) {
        const int node = side == Side::left ? l : dom.resolution - l;
        acc = q(node);
      } else {
        const int n = dom.resolution;
        for (int m = 0; m <= n; ++m) {
          int i = 0, j = 0;
          switch (side) {
            case Side::left: i = l; j = m; break;
            case Side::right: i = n - l; j = m; break;
            case Side::bottom: i = m; j = l; break;
            case Side::top: i = m; j = n - l; break;
          }
          const double w = (m == 0 || m == n) ? 0.5 * h : h;
          acc += w * q(i + j * (n + 1));
        }
      }
      g_layer[static_cast<size_t>(l)] += acc;
    }
  }

  std::vector<double> taus, gs;
  double running = 0.0;
  for (int m = 1; m <= layers; ++m) {
    running += 0.5 * h * (g_layer[static_cast<size_t>(m)] + g_layer[static_cast<size_t>(m - 1)]);
    if (m < first_layer) continue;
    const double tau = m * h;
    const double g = running / tau;
    taus.push_back(tau);
    gs.push_back(g);
    rep.add("g", tau, g, kInf, true, false);
  }

  // least-squares slope of log g vs log tau over strictly positive layers
  std::vector<double> lx, ly;
  for (size_t m = 0; m < gs.size(); ++m)
    if (gs[m] > 0.0) {
      lx.push_back(std::log(taus[m]));
      ly.push_back(std::log(gs[m]));
    }
  if (lx.size() < 4) {
    rep.add("degenerate_profile", 0.0, static_cast<double>(lx.size()), 4.0, true, false);
    rep.note = "fewer than 4 positive layers; slope undefined";
    return rep;
  }
  const double n_pts = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n_pts;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n_pts;
  double sxx = 0.0, sxy = 0.0;
  for (size_t m = 0; m < lx.size(); ++m) {
    sxx += (lx[m] - mx) * (lx[m] - mx);
    sxy += (lx[m] - mx) * (ly[m] - my);
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (size_t m = 0; m < lx.size(); ++m) {
    const double fit = my + slope * (lx[m] - mx);
    ss_res += (ly[m] - fit) * (ly[m] - fit);
  }
  const double residual = std::sqrt(ss_res / n_pts);
  const bool finite = std::isfinite(slope) && std::isfinite(residual);
  rep.add("slope", 0.0, slope, kInf, finite);
  rep.add("fit_residual", 0.0, residual, kInf, finite);
  if (s > 0.5) {
    // one-sided reading of the O(tau^{1-2s}) class: the profile may not decay
    // slower than the paper exponent minus the wide band
    const double exponent = 1.0 - 2.0 * s;
    rep.add("slope_vs_paper_exponent", 0.0, slope, exponent - 0.5, slope >= exponent - 0.5,
            false);
  }
  return rep;
}

CheckReport initial_trace(const StateTrajectory& traj, const Problem& problem,
                          const TestBank& bank) {
  CheckReport rep;
  rep.check = "initial_trace";
  const auto& ops = problem.ops;
  const size_t n_check = std::min<size_t>(10, traj.states.size() - 1);
  if (n_check == 0) {
    rep.note = "trajectory too short";
    return rep;
  }

  std::vector<std::pair<std::string, Eigen::VectorXd>> zetas;
  for (const auto& t : bank.tests) {
    const std::string name = t.name.substr(0, t.name.find('*'));
    bool seen = false;
    for (const auto& [existing, z] : zetas) {
      (void)z;
      if (existing == name) seen = true;
    }
    if (!seen) zetas.emplace_back(name, t.zeta);
  }

  const Eigen::VectorXd& u0 = traj.states.front();
  const Eigen::VectorXd& u1 = traj.states[1];
  const double dt1 = traj.times[1] - traj.times[0];
  const double rate1 = l2_norm(ops, u1 - u0) / dt1;

  double c_constant = 0.0;
  for (const auto& [name, zeta] : zetas) {
    const double znorm = l2_norm(ops, zeta);
    const double e1 = std::abs(l2_inner(ops, u1 - u0, zeta));
    const double bound = rate1 * dt1 * znorm * (1.0 + 1e-10) + 1e-300;
    rep.add("e_t1_" + name, traj.times[1], e1, bound, e1 <= bound);
    if (znorm > 0.0) c_constant = std::max(c_constant, e1 / (dt1 * znorm));
  }
  rep.add("C_constant", 0.0, c_constant, rate1, true, false);

  // growth of the pairing error over the first steps for the first zeta
  if (!zetas.empty())
    for (size_t n = 1; n <= n_check; ++n)
      rep.add("e_growth_" + zetas.front().first, traj.times[n],
              std::abs(l2_inner(ops, traj.states[n] - u0, zetas.front().second)), kInf, true,
              false);

  // zeta = 1 on the free nodes reduces exactly to the mass drift (lumped mass)
  if (ops.mass_mode == MassMode::lumped) {
    Eigen::VectorXd ones_free = Eigen::VectorXd::Ones(ops.n_nodes);
    for (int i = 0; i < ops.n_nodes; ++i)
      if (ops.gamma0_mask[static_cast<size_t>(i)]) ones_free(i) = 0.0;
    double worst = 0.0;
    for (size_t n = 1; n <= n_check; ++n) {
      const double pairing = l2_inner(ops, traj.states[n] - u0, ones_free);
      const double drift = integral(ops, traj.states[n]) - integral(ops, u0);
      worst = std::max(worst, std::abs(pairing - drift));
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(integral(ops, u0)));
    rep.add("mass_consistency", 0.0, worst, tol, worst <= tol);
  }
  return rep;
}

namespace {

// exact integral of exp(g) over an element with P1-linear g
double exp_integral_1d(double length, double g0, double g1) {
  const double d = g1 - g0;
  if (std::abs(d) < 1e-12) return length * std::exp(0.5 * (g0 + g1));
  return length * std::exp(g0) * std::expm1(d) / d;
}

double exp_integral_tri(double area, double g0, double g1, double g2) {
  double v[3] = {g0, g1, g2};
  std::sort(v, v + 3);
  const double spread = v[2] - v[0];
  if (spread < 1e-6) return area * std::exp((g0 + g1 + g2) / 3.0);
  auto first_dd = [](double a, double b) {
    const double d = b - a;
    if (std::abs(d) < 1e-12) return std::exp(0.5 * (a + b));
    return std::exp(a) * std::expm1(d) / d;
  };
  const double dd01 = first_dd(v[0], v[1]);
  const double dd12 = first_dd(v[1], v[2]);
  const double dd2 = (dd12 - dd01) / (v[2] - v[0]);
  return 2.0 * area * dd2;
}

}  // namespace

CheckReport cutoff_experiment(const DiscreteDomain& domain, const std::vector<double>& k_list) {
  CheckReport rep;
  rep.check = "cutoff";
  const Eigen::MatrixXd grad_h = ref::element_gradients(domain, domain.h_values);
  const int nv = domain.dimension + 1;

  std::vector<double> i1(k_list.size(), 0.0), i2(k_list.size(), 0.0);
  for (size_t ki = 0; ki < k_list.size(); ++ki) {
    const double k = k_list[ki];
    double acc1 = 0.0, acc2 = 0.0;
    for (int e = 0; e < domain.element_count(); ++e) {
      double g[3] = {0.0, 0.0, 0.0};
      for (int m = 0; m < nv; ++m) g[m] = -2.0 * k * domain.h_values(domain.elements(e, m));
      double ex;
      double vol;
      if (domain.dimension == 1) {
        const int i = domain.elements(e, 0), j = domain.elements(e, 1);
        vol = domain.node_coords(j, 0) - domain.node_coords(i, 0);
        ex = exp_integral_1d(vol, g[0], g[1]);
      } else {
        const Eigen::Vector2d p0 = domain.node_coords.row(domain.elements(e, 0)).head<2>();
        const Eigen::Vector2d p1 = domain.node_coords.row(domain.elements(e, 1)).head<2>();
        const Eigen::Vector2d p2 = domain.node_coords.row(domain.elements(e, 2)).head<2>();
        vol = 0.5 * std::abs((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
        ex = exp_integral_tri(vol, g[0], g[1], g[2]);
      }
      acc1 += ex;
      acc2 += k * k * grad_h.row(e).squaredNorm() * ex;
    }
    i1[ki] = acc1;
    i2[ki] = acc2;
  }

  bool decreasing = true;
  for (size_t ki = 0; ki < k_list.size(); ++ki) {
    const double k = k_list[ki];
    if (domain.dimension == 1) {
      const double closed = k == 0.0 ? 1.0 : -std::expm1(-k) / k;
      const double rel = std::abs(i1[ki] - closed) / closed;
      rep.add("one_minus_xi_sq", k, i1[ki], closed, rel <= 0.02);
    } else {
      rep.add("one_minus_xi_sq", k, i1[ki], kInf, true, false);
    }
    rep.add("grad_xi_sq", k, i2[ki], kInf, true, false);
    if (ki > 0 && !(i1[ki] < i1[ki - 1])) decreasing = false;
  }
  rep.add("one_minus_xi_sq_decreasing", 0.0, decreasing ? 1.0 : 0.0, 1.0, decreasing);
  // The vanishing-gradient limit claimed for xi_k is not what the level set
  // with |grad h| = 1 near the boundary produces: the measured integral grows
  // ~ linearly in k. Reported, flagged, and excluded from the asserted laws.
  double growth = 0.0;
  for (size_t ki = 0; ki < i2.size(); ++ki)
    if (i2[ki] > 0.0) {
      growth = i2.back() / i2[ki];
      break;
    }
  rep.add("lemma_gradient_discrepancy_flag", k_list.empty() ? 0.0 : k_list.back(), growth, 1.0,
          true, false);
  rep.note = "gradient integral grows with k; vanishing-limit claim flagged, not asserted";
  return rep;
}

}  // namespace fracpm
