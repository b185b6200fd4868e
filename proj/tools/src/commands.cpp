#include "commands.hpp"

#include "manifest.hpp"

#include "ppls/csv.hpp"
#include "ppls/error.hpp"
#include "ppls/scenario_io.hpp"
#include "ppls/simulation.hpp"
#include "ppls/theta_json.hpp"

#include <fstream>
#include <iostream>

namespace ppls::cli {

using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
      return kMalformedInput;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ComponentOutOfRange:
    case ErrorCode::NonSquareCrossBlock:
      return kDimensionMismatch;
    case ErrorCode::TooManyFailedReplicates:
    case ErrorCode::ScenarioFailed:
      return kTooManyFailures;
    default:
      return kNumericalFailure;
  }
}

namespace {

DataPair load_data(const DataOptions& o) {
  CsvMatrix x = read_csv_matrix(o.x_csv);
  CsvMatrix y = read_csv_matrix(o.y_csv);
  DataPair data = make_data_pair(std::move(x.values), std::move(y.values));
  if (!o.no_center) return center(data, o.unit_variance);
  if (o.unit_variance) {
    throw Error(ErrorCode::InvalidArgument, "--unit-variance cannot be combined with --no-center");
  }
  if (!data.centered) {
    throw Error(ErrorCode::InvalidArgument, "--no-center given but the columns are not centered");
  }
  return data;
}

json data_json(const DataOptions& o) {
  return {{"x_csv", o.x_csv.string()},
          {"y_csv", o.y_csv.string()},
          {"center", !o.no_center},
          {"unit_variance", o.unit_variance}};
}

json fit_json(const FitConfig& f) {
  return {{"max_iter", f.max_iter},
          {"tol_loglik", f.tol_loglik},
          {"orthogonalization", to_string(f.orthogonalization)},
          {"seed", f.seed}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

}  // namespace

int run_fit(const FitOptions& o) {
  Manifest manifest;
  manifest.command = "fit";
  const DataPair data = load_data(o.data);
  if (o.r <= 0 || o.r >= std::min(data.p(), data.q())) {
    throw Error(ErrorCode::DimensionMismatch,
                "r = " + std::to_string(o.r) + " violates the identifiability requirement r < min(p, q) = " +
                    std::to_string(std::min(data.p(), data.q())));
  }
  const FitResult fit = fit_ppls(data, o.r, o.fit);

  std::filesystem::create_directories(o.out_dir);
  write_theta_file(o.out_dir / "theta.json", fit.theta);
  {
    std::ofstream trace(o.out_dir / "trace.csv");
    trace << "iteration,loglik\n";
    for (std::size_t i = 0; i < fit.loglik_trace.size(); ++i) {
      trace << i << ',' << format_double(fit.loglik_trace[i]) << '\n';
    }
  }
  const LatentPosterior post = latent_posterior(data, fit.theta);
  const VarianceExplained ve = variance_explained(data, post.mu_t, post.mu_u, fit.theta);
  json summary;
  summary["schema_version"] = 1;
  summary["n"] = data.n();
  summary["p"] = data.p();
  summary["q"] = data.q();
  summary["r"] = o.r;
  summary["converged"] = fit.converged;
  summary["iterations"] = fit.iterations;
  summary["loglik"] = fit.loglik_trace.back();
  summary["variance_explained"] = {{"x", ve.x_ratio}, {"y", ve.y_ratio}};
  summary["overlap_fraction"] =
      data.p() == data.q() ? json(overlap_fraction(fit.theta)) : json(nullptr);
  summary["rv_coefficient"] = rv_coefficient(data.x, data.y);
  summary["warnings"] = fit.warnings;
  write_text(o.out_dir / "summary.json", summary.dump(2) + "\n");

  manifest.config = {{"data", data_json(o.data)}, {"r", o.r}, {"fit", fit_json(o.fit)}};
  manifest.inputs = {o.data.x_csv, o.data.y_csv};
  manifest.outputs = {"theta.json", "trace.csv", "summary.json"};
  manifest.extra["seeds"] = {{"init", o.fit.seed}};
  manifest.write(o.out_dir);

  for (const auto& w : fit.warnings) std::cerr << "ppls: warning: " << w << '\n';
  if (!fit.converged) {
    std::cerr << "ppls: stopped at the iteration limit (" << o.fit.max_iter
              << ") before the log-likelihood converged\n";
    return kMaxIterations;
  }
  return kOk;
}

int run_simulate(const SimulateOptions& o) {
  Manifest manifest;
  manifest.command = "simulate";
  ScenarioConfig config = read_scenario_config(o.config);
  if (o.seed) config.base_seed = *o.seed;
  if (o.threads) config.threads = *o.threads;
  const ScenarioResult result = run_scenario(config);
  write_scenario_outputs(result, o.out_dir);

  manifest.config = json::parse(scenario_config_to_json(config));
  manifest.inputs = {o.config};
  manifest.outputs = {"bias.csv", "variance.csv", "ordering.json"};
  manifest.extra["seeds"] = {{"base_seed", config.base_seed},
                             {"replicate_seed_rule", "base_seed + replicate index"}};
  manifest.write(o.out_dir);
  return kOk;
}

int run_se(const SeOptions& o) {
  Manifest manifest;
  manifest.command = "se";
  const DataPair data = load_data(o.data);
  const Theta theta = read_theta_file(o.theta_json);
  require_consistent_dims(theta);
  if (theta.p() != data.p() || theta.q() != data.q()) {
    throw Error(ErrorCode::DimensionMismatch, "theta dimensions (p = " + std::to_string(theta.p()) +
                                                  ", q = " + std::to_string(theta.q()) +
                                                  ") do not match the data");
  }

  LoadingSE se;
  if (o.method == "asymptotic") {
    se = asymptotic_loading_se(data, theta, o.information);
  } else if (o.method == "bootstrap") {
    BootstrapOptions bo;
    bo.replicates = o.replicates;
    bo.base_seed = o.seed;
    bo.threads = o.threads;
    se = bootstrap_se(data, theta, o.fit, bo);
  } else {
    throw Error(ErrorCode::InvalidArgument, "method must be 'asymptotic' or 'bootstrap'");
  }

  std::filesystem::create_directories(o.out_dir);
  {
    std::ofstream out(o.out_dir / "se.csv");
    out << "matrix,row,component,se,method,note\n";
    const std::string method = to_string(se.method);
    auto emit = [&](const char* name, const Matrix& m, const std::vector<bool>& degenerate,
                    bool extrapolated) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        const bool deg = !degenerate.empty() && degenerate[static_cast<std::size_t>(k)];
        std::string note = deg ? "degenerate" : "";
        if (extrapolated) note += note.empty() ? "symmetry_extrapolation" : ";symmetry_extrapolation";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          out << name << ',' << i + 1 << ',' << k + 1 << ',' << format_double(m(i, k)) << ','
              << method << ',' << note << '\n';
        }
      }
    };
    emit("W", se.se_w, se.degenerate_w, false);
    emit("C", se.se_c, se.degenerate_c, se.c_by_symmetry);
  }

  json cfg = {{"data", data_json(o.data)},
              {"theta", o.theta_json.string()},
              {"method", o.method}};
  if (o.method == "asymptotic") {
    cfg["information"] = to_string(o.information);
  } else {
    cfg["replicates"] = o.replicates;
    cfg["seed"] = o.seed;
    cfg["fit"] = fit_json(o.fit);
  }
  manifest.config = cfg;
  manifest.inputs = {o.data.x_csv, o.data.y_csv, o.theta_json};
  manifest.outputs = {"se.csv"};
  manifest.extra["se"] = {{"c_symmetry_extrapolation", se.c_by_symmetry},
                          {"degenerate_information", se.degenerate},
                          {"bootstrap_replicates_used", se.bootstrap_replicates},
                          {"bootstrap_replicates_failed", se.failed_replicates},
                          {"warnings", se.warnings}};
  if (o.method == "bootstrap") manifest.extra["seeds"] = {{"base_seed", o.seed}};
  manifest.write(o.out_dir);

  for (const auto& w : se.warnings) std::cerr << "ppls: warning: " << w << '\n';
  return se.degenerate ? kNumericalFailure : kOk;
}

}  // namespace ppls::cli
