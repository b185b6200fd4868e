#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ppls::cli {

std::string sha256_file(const std::filesystem::path& path);

/// UTC, second resolution, e.g. 2024-05-01T12:00:00Z.
std::string utc_timestamp(std::chrono::system_clock::time_point t);

/// What a run needs to be repeated: the command, its fully resolved options,
/// digests of every input file, and the library version.
struct Manifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::string> outputs;
  nlohmann::json extra = nlohmann::json::object();
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void write(const std::filesystem::path& dir) const;
};

}  // namespace ppls::cli
