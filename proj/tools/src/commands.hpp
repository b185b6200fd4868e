#pragma once

#include "ppls/em.hpp"
#include "ppls/error.hpp"
#include "ppls/inference.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ppls::cli {

enum ExitCode : int {
  kOk = 0,
  kMalformedInput = 1,
  kDimensionMismatch = 2,
  kMaxIterations = 3,
  kNumericalFailure = 4,
  kTooManyFailures = 5,
};

struct DataOptions {
  std::filesystem::path x_csv;
  std::filesystem::path y_csv;
  bool no_center = false;
  bool unit_variance = false;
};

struct FitOptions {
  DataOptions data;
  int r = 0;
  std::filesystem::path out_dir = ".";
  FitConfig fit;
};

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct SeOptions {
  DataOptions data;
  std::filesystem::path theta_json;
  std::string method = "asymptotic";
  InformationKind information = InformationKind::Constrained;
  int replicates = 1000;
  std::uint64_t seed = 1;
  int threads = 0;
  FitConfig fit;  // used by bootstrap refits
  std::filesystem::path out_dir = ".";
};

int run_fit(const FitOptions& options);
int run_simulate(const SimulateOptions& options);
int run_se(const SeOptions& options);

/// Maps a library error to the documented process exit code.
int exit_code_for(ErrorCode code);

}  // namespace ppls::cli
