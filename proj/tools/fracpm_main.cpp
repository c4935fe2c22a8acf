#include "fracpm/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"spectral-fractional degenerate diffusion experiments"};
  app.require_subcommand(1);

  std::string config_path;
  fracpm::RunOptions options;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", options.out_dir, "output directory (overrides the config)");
    cmd->add_option("--jobs", options.jobs, "sweep worker count (default: hardware)");
    cmd->add_flag("--no-timestamp", options.no_timestamp, "suppress the timestamp header line");
    return cmd;
  };

  auto* spectral = add_common(app.add_subcommand("spectral", "eigenvalues and operator laws"));
  spectral->add_flag("--dump-operators", options.dump_operators,
                     "write mass/stiffness triplet dump");
  auto* solve = add_common(app.add_subcommand("solve", "one regularized run with diagnostics"));
  auto* sweep = add_common(app.add_subcommand("sweep", "(delta,mu) limit sweep"));
  auto* verify = add_common(app.add_subcommand("verify", "full invariant suite"));

  CLI11_PARSE(app, argc, argv);

  const fracpm::ParseResult parsed = fracpm::parse_config_file(config_path);
  if (!parsed.ok()) {
    for (const auto& err : parsed.errors) {
      if (err.line > 0)
        std::cerr << config_path << ":" << err.line << ": " << err.message << "\n";
      else
        std::cerr << config_path << ": " << err.message << "\n";
    }
    return 2;
  }

  try {
    if (spectral->parsed()) return fracpm::cmd_spectral(*parsed.config, options);
    if (solve->parsed()) return fracpm::cmd_solve(*parsed.config, options);
    if (sweep->parsed()) return fracpm::cmd_sweep(*parsed.config, options);
    if (verify->parsed()) return fracpm::cmd_verify(*parsed.config, options);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  }
  return 2;
}
