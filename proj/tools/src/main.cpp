#include "commands.hpp"

#include "ppls/error.hpp"

#include <iostream>
#include <map>

#include "CLI11.hpp"

namespace {

void add_data_options(CLI::App* cmd, ppls::cli::DataOptions& d) {
  cmd->add_option("--x", d.x_csv, "CSV of X (N x p) with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_option("--y", d.y_csv, "CSV of Y (N x q) with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--no-center", d.no_center, "use the columns as given (they must already be centered)");
  cmd->add_flag("--unit-variance", d.unit_variance, "scale every column to unit sample variance");
}

void add_fit_options(CLI::App* cmd, ppls::FitConfig& f) {
  static const std::map<std::string, ppls::Orthogonalization> orth{
      {"eigen", ppls::Orthogonalization::Eigenvectors},
      {"cholesky", ppls::Orthogonalization::CholeskyLower}};
  cmd->add_option("--max-iter", f.max_iter, "EM iteration limit")->capture_default_str();
  cmd->add_option("--tol", f.tol_loglik, "stop when the log-likelihood gains less than this")
      ->capture_default_str();
  cmd->add_option("--orthogonalization", f.orthogonalization, "loading update: eigen or cholesky")
      ->transform(CLI::CheckedTransformer(orth).description(""))
      ->type_name("eigen|cholesky [eigen]");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ppls::cli;
  CLI::App app{"Probabilistic partial least squares"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a PPLS model to paired CSV data");
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("-r,--components", fit.r, "number of latent components")->required();
  fit_cmd->add_option("-o,--out", fit.out_dir, "output directory")->capture_default_str();
  fit_cmd->add_option("--seed", fit.fit.seed, "perturbs the SVD start when non-zero")->capture_default_str();
  add_fit_options(fit_cmd, fit.fit);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation scenario from a JSON config");
  sim_cmd->add_option("-c,--config", sim.config, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("-o,--out", sim.out_dir, "output directory")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "overrides base_seed from the config");
  sim_cmd->add_option("--threads", sim.threads, "worker threads (0: all cores)");

  SeOptions se;
  auto* se_cmd = app.add_subcommand("se", "standard errors of the loadings");
  add_data_options(se_cmd, se.data);
  se_cmd->add_option("--theta", se.theta_json, "theta.json from 'ppls fit'")->required()->check(CLI::ExistingFile);
  se_cmd->add_option("--method", se.method, "asymptotic or bootstrap")
      ->check(CLI::IsMember({"asymptotic", "bootstrap"}))->capture_default_str();
  se_cmd->add_option("--information", se.information, "asymptotic variant: constrained or column")
      ->transform(CLI::CheckedTransformer(std::map<std::string, ppls::InformationKind>{
          {"constrained", ppls::InformationKind::Constrained},
          {"column", ppls::InformationKind::Column}}).description(""))
      ->type_name("constrained|column [constrained]");
  se_cmd->add_option("--replicates", se.replicates, "bootstrap replicates")->capture_default_str();
  se_cmd->add_option("--seed", se.seed, "bootstrap base seed")->capture_default_str();
  se_cmd->add_option("--threads", se.threads, "worker threads (0: all cores)");
  se_cmd->add_option("-o,--out", se.out_dir, "output directory")->capture_default_str();
  add_fit_options(se_cmd, se.fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kMalformedInput;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*sim_cmd) return run_simulate(sim);
    return run_se(se);
  } catch (const ppls::Error& e) {
    std::cerr << "ppls: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ppls: " << e.what() << '\n';
    return kNumericalFailure;
  }
}
