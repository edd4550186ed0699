// smlpde command line: convergence study, approximation probe, gradient
// check and the default configuration.

#include <cmath>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "smlpde/config.hpp"
#include "smlpde/errors.hpp"
#include "smlpde/experiment.hpp"

namespace {

int run(const std::string& path, const std::string& out_override, bool quiet) {
  smlpde::ExperimentConfig cfg = smlpde::parse_config_file(path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const auto report = smlpde::run_convergence_study(cfg, cfg.output_dir, quiet ? nullptr : &std::cerr);
  smlpde::write_report_csv(std::cout, report);
  if (!report.lambda_rate_decreasing)
    std::cerr << "warning: lambda_m m^(-beta_hat q) is not decreasing for beta_hat = "
              << smlpde::format_real(report.beta_hat) << '\n';
  if (!report.nu_psi_decreasing) std::cerr << "warning: nu_m psi_hat(m) is not decreasing\n";
  for (const auto& row : report.rows)
    if (row.status != "ok") return 2;
  return 0;
}

int probe(const std::string& path, const std::string& out_override, bool quiet) {
  smlpde::ExperimentConfig cfg = smlpde::parse_config_file(path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const auto report = smlpde::approximation_probe(cfg.probe, cfg.objective.param_norm_p, cfg.output_dir,
                                                  quiet ? nullptr : &std::cerr);
  smlpde::write_probe_csv(std::cout, report);
  for (const auto& row : report.rows)
    if (row.status != "ok") return 2;
  return 0;
}

int gradcheck(const std::string& path, double tol) {
  const smlpde::ExperimentConfig cfg = smlpde::parse_config_file(path);
  const auto rep = smlpde::gradcheck_study(cfg);
  std::cout << "block,coords,max_rel_error\n";
  std::cout << "u," << rep.u_coords << ',' << smlpde::format_real(rep.u) << '\n';
  std::cout << "phi," << rep.phi_coords << ',' << smlpde::format_real(rep.phi) << '\n';
  std::cout << "theta," << rep.theta_coords << ',' << smlpde::format_real(rep.theta) << '\n';
  const bool ok = rep.u < tol && rep.phi < tol && rep.theta < tol;
  std::cerr << (ok ? "gradient check passed" : "gradient check FAILED") << " (tolerance "
            << smlpde::format_real(tol) << ")\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured model learning for PDEs: all-at-once recovery of states, parameters "
               "and a network nonlinearity"};
  app.require_subcommand(1);

  std::string config, out;
  bool quiet = false;
  double tol = 1e-5;

  auto* run_cmd = app.add_subcommand("run", "Run the m-indexed convergence study");
  run_cmd->add_option("config", config, "Experiment configuration file")->required();
  run_cmd->add_option("-o,--output", out, "Override the output directory");
  run_cmd->add_flag("-q,--quiet", quiet, "No progress output");

  auto* probe_cmd = app.add_subcommand("probe", "Run the approximation-rate probe");
  probe_cmd->add_option("config", config, "Experiment configuration file")->required();
  probe_cmd->add_option("-o,--output", out, "Override the output directory");
  probe_cmd->add_flag("-q,--quiet", quiet, "No progress output");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare objective gradients with finite differences");
  grad_cmd->add_option("config", config, "Experiment configuration file")->required();
  grad_cmd->add_option("--tol", tol, "Largest accepted relative error");

  app.add_subcommand("print-default-config", "Print the default configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config, out, quiet);
    if (*probe_cmd) return probe(config, out, quiet);
    if (*grad_cmd) return gradcheck(config, tol);
    smlpde::print_config(std::cout, smlpde::default_config());
    return 0;
  } catch (const smlpde::ConfigError& e) {
    std::cerr << config << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
