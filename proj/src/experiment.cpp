#include "fracpm/experiment.hpp"

#include "fracpm/kernels.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fracpm {

namespace {

struct Context {
  ExperimentConfig cfg;
  RunOptions opt;
  std::string out;
  CsvOptions csv;
  Problem problem;
};

Context make_context(const ExperimentConfig& config, const RunOptions& options) {
  Context ctx;
  ctx.cfg = config;
  ctx.opt = options;
  ctx.out = options.out_dir.empty() ? config.output_dir : options.out_dir;
  std::filesystem::create_directories(ctx.out);
  ctx.csv.config_hash = config.hash();
  ctx.csv.timestamp = !options.no_timestamp;

  std::ofstream echo(ctx.out + "/effective_config.cfg", std::ios::binary);
  echo << config.serialize();

  ctx.problem = build_problem(config.dimension, config.resolution, config.gamma0,
                              config.coefficient.to_fn(), config.mass_mode);
  return ctx;
}

std::string sanitize(std::string text) {
  for (auto& ch : text)
    if (ch == ',' || ch == '\n') ch = ';';
  return text;
}

std::vector<std::string> suite_rows(const OperatorLawReport& suite) {
  std::vector<std::string> rows;
  for (const auto& law : suite.laws)
    rows.push_back("operator_suite," + law.name + ",0," + csv_number(law.max_violation) + "," +
                   csv_number(law.tolerance) + "," + (law.pass ? "true" : "false"));
  return rows;
}

std::vector<std::string> trajectory_rows(const StateTrajectory& traj) {
  std::vector<std::string> rows;
  rows.reserve(traj.ledger.size());
  for (const auto& r : traj.ledger) {
    std::ostringstream row;
    row << csv_number(r.t) << ',' << csv_number(r.mass) << ',' << csv_number(r.min_u) << ','
        << csv_number(r.max_u) << ',' << csv_number(r.entropy) << ','
        << csv_number(r.hs_energy) << ',' << r.clamp_count;
    rows.push_back(row.str());
  }
  return rows;
}

int default_shell_count(const ExperimentConfig& cfg) {
  return std::min(4, cfg.resolution / 2 + 1);
}

std::vector<double> cutoff_k_list() { return {1, 2, 4, 8, 16, 32, 64, 128, 256}; }

}  // namespace

int cmd_spectral(const ExperimentConfig& config, const RunOptions& options) {
  const Context ctx = make_context(config, options);
  const auto& dec = ctx.problem.dec;

  std::vector<std::string> rows;
  for (int k = 0; k < dec.mode_count(); ++k)
    rows.push_back(std::to_string(k + 1) + "," + csv_number(dec.eigenvalues(k)));
  write_csv(ctx.out + "/eigenvalues.csv", "k,lambda", rows, ctx.csv);

  const OperatorLawReport suite = verify_operator_suite(dec, ctx.problem.ops, 20);
  write_csv(ctx.out + "/operator_suite.csv", kCheckHeader, suite_rows(suite), ctx.csv);

  if (options.dump_operators) {
    std::ofstream dump(ctx.out + "/operators.txt", std::ios::binary);
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(ctx.csv.config_hash));
    dump << "# config " << hash_buf << "\n";
    dump_operators(ctx.problem.ops, dump);
  }
  return suite.all_pass ? 0 : 1;
}

int cmd_solve(const ExperimentConfig& config, const RunOptions& options) {
  const Context ctx = make_context(config, options);
  const InitialData u0 = initial_profile(ctx.problem.domain, config.initial);
  const SolverConfig scfg = config.solver_config();
  const StateTrajectory traj = run(u0, scfg, ctx.problem);

  write_csv(ctx.out + "/trajectory.csv", "t,mass,min_u,max_u,entropy,hs_energy,clamp_count",
            trajectory_rows(traj), ctx.csv);

  if (traj.aborted) {
    std::cerr << "run aborted: " << traj.abort_reason << "\n";
    return 3;
  }

  const auto& dom = ctx.problem.domain;
  for (size_t j = 0; j < config.snapshot_times.size(); ++j) {
    const double t = config.snapshot_times[j];
    const Eigen::VectorXd u = traj.sample_state(t);
    const Eigen::VectorXd ksu = k_s(ctx.problem.dec, scfg.s, u);
    std::vector<std::string> rows;
    for (int i = 0; i < dom.node_count(); ++i) {
      std::ostringstream row;
      row << csv_number(dom.node_coords(i, 0)) << ',';
      if (dom.dimension == 2) row << csv_number(dom.node_coords(i, 1)) << ',';
      row << csv_number(u(i)) << ',' << csv_number(ksu(i));
      rows.push_back(row.str());
    }
    const std::string header = dom.dimension == 2 ? "x,y,u,ksu" : "x,u,ksu";
    write_csv(ctx.out + "/snapshot_" + std::to_string(j) + ".csv", header, rows, ctx.csv);
  }

  const TestBank bank = make_test_bank(ctx.problem, scfg.t_end);
  const ShellFamily shells = build_shells(dom, default_shell_count(config));
  const std::vector<CheckReport> reports = {
      check_bounds(traj),
      check_mass(traj),
      check_first_energy(traj, ctx.problem),
      check_second_energy(traj, ctx.problem),
      check_ledger_consistency(traj, ctx.problem),
      weak_residual(traj, ctx.problem, bank),
      shell_flux(traj, ctx.problem, shells, bank),
      dirichlet_scaling(traj, ctx.problem),
      initial_trace(traj, ctx.problem, bank),
  };
  for (const auto& rep : reports)
    write_csv(ctx.out + "/diag_" + rep.check + ".csv", kCheckHeader, check_csv_rows(rep),
              ctx.csv);
  return 0;
}

int cmd_sweep(const ExperimentConfig& config, const RunOptions& options) {
  const Context ctx = make_context(config, options);
  const InitialData u0 = initial_profile(ctx.problem.domain, config.initial);
  const SweepReport sweep = limit_sweep(u0, config.solver_config(), config.delta_grid,
                                        config.mu_grid, ctx.problem, options.jobs);

  std::vector<std::string> rows, detail;
  bool any_ok = false;
  for (size_t r = 0; r < sweep.runs.size(); ++r) {
    const SweepRun& sr = sweep.runs[r];
    any_ok = any_ok || sr.ok;
    std::ostringstream row;
    if (sr.ok)
      row << csv_number(sr.delta) << ',' << csv_number(sr.mu) << ','
          << csv_number(sr.mass_drift) << ',' << csv_number(sr.linf_violation) << ','
          << (sr.has_cauchy ? csv_number(sr.cauchy_diff) : "nan");
    else
      row << csv_number(sr.delta) << ',' << csv_number(sr.mu) << ",nan,nan,nan";
    rows.push_back(row.str());

    std::ostringstream d;
    d << r << ',' << (r < static_cast<size_t>(sweep.delta_leg_size) ? "delta" : "mu") << ','
      << csv_number(sr.delta) << ',' << csv_number(sr.mu) << ',' << (sr.ok ? "true" : "false")
      << ',' << sr.steps << ',' << sr.clamp_total << ',' << sanitize(sr.error);
    detail.push_back(d.str());
  }
  write_csv(ctx.out + "/sweep.csv", "delta,mu,mass_drift,linf_violation,cauchy_diff", rows,
            ctx.csv);
  write_csv(ctx.out + "/sweep_runs.csv", "run,leg,delta,mu,ok,steps,clamp_total,error", detail,
            ctx.csv);
  return any_ok ? 0 : 3;
}

int cmd_verify(const ExperimentConfig& config, const RunOptions& options) {
  const Context ctx = make_context(config, options);
  const Problem& prob = ctx.problem;
  std::vector<std::string> rows;
  bool all_pass = true;
  auto add_row = [&](const std::string& check, const std::string& quantity, double key,
                     double value, double bound, bool pass, bool gating = true) {
    rows.push_back(check + "," + quantity + "," + csv_number(key) + "," + csv_number(value) +
                   "," + csv_number(bound) + "," + (pass ? "true" : "false"));
    if (gating) all_pass = all_pass && pass;
  };
  auto add_report = [&](const CheckReport& rep) {
    for (const auto& row : check_csv_rows(rep)) rows.push_back(row);
    all_pass = all_pass && rep.pass;
  };

  // operator laws
  const OperatorLawReport suite = verify_operator_suite(prob.dec, prob.ops, 30);
  for (const auto& row : suite_rows(suite)) rows.push_back(row);
  all_pass = all_pass && suite.all_pass;

  const SolverConfig scfg = config.solver_config();

  // zero data is an exact fixed point
  {
    SolverConfig zcfg = scfg;
    zcfg.t_end = 5 * zcfg.dt;
    InitialData zero;
    zero.values = Eigen::VectorXd::Zero(prob.domain.node_count());
    const StateTrajectory traj = run(zero, zcfg, prob);
    double worst = 0.0;
    for (const auto& s : traj.states) worst = std::max(worst, s.cwiseAbs().maxCoeff());
    add_row("solver", "zero_fixed_point", 0.0, worst, 0.0, worst == 0.0 && !traj.aborted);
  }

  // linear-regime resolvent law: single-mode decay factor 1/(1 + dt delta lambda)
  {
    SolverConfig lcfg = scfg;
    lcfg.disable_transport = true;
    ImexStepper stepper(prob, lcfg);
    double worst = 0.0;
    for (int k = 0; k < std::min(3, prob.dec.mode_count()); ++k) {
      const Eigen::VectorXd mode = prob.dec.modes.col(k);
      const Eigen::VectorXd next = stepper.step(mode, lcfg.dt);
      const double factor = 1.0 / (1.0 + lcfg.dt * lcfg.delta * prob.dec.eigenvalues(k));
      worst = std::max(worst, (next - factor * mode).norm() / mode.norm());
    }
    add_row("solver", "resolvent_law", 0.0, worst, 1e-12, worst <= 1e-12);
  }

  // short run with the config's own solver block
  SolverConfig short_cfg = scfg;
  short_cfg.t_end = std::min(scfg.t_end, 60.0 * scfg.dt);
  const InitialData u0 = initial_profile(prob.domain, config.initial);

  // bit-identical repeat
  {
    SolverConfig dcfg = short_cfg;
    dcfg.t_end = std::min(short_cfg.t_end, 10.0 * short_cfg.dt);
    const StateTrajectory a = run(u0, dcfg, prob);
    const StateTrajectory b = run(u0, dcfg, prob);
    bool identical = a.states.size() == b.states.size();
    for (size_t n = 0; identical && n < a.states.size(); ++n)
      identical = a.states[n] == b.states[n];
    add_row("solver", "determinism", 0.0, identical ? 0.0 : 1.0, 0.0, identical);
  }

  const StateTrajectory traj = run(u0, short_cfg, prob);
  if (traj.aborted) {
    add_row("run", "aborted", traj.times.back(), 1.0, 0.0, false);
  } else {
    const TestBank bank = make_test_bank(prob, short_cfg.t_end);
    const ShellFamily shells = build_shells(prob.domain, default_shell_count(config));
    add_report(check_bounds(traj));
    add_report(check_mass(traj));
    add_report(check_first_energy(traj, prob));
    add_report(check_second_energy(traj, prob));
    add_report(check_ledger_consistency(traj, prob));
    add_report(weak_residual(traj, prob, bank));
    add_report(shell_flux(traj, prob, shells, bank));
    add_report(dirichlet_scaling(traj, prob));
    add_report(initial_trace(traj, prob, bank));
  }
  add_report(cutoff_experiment(prob.domain, cutoff_k_list()));

  write_csv(ctx.out + "/report.csv", kCheckHeader, rows, ctx.csv);
  return all_pass ? 0 : 1;
}

}  // namespace fracpm
