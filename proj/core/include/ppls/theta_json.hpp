#pragma once

#include "ppls/model.hpp"

#include <filesystem>
#include <string>

namespace ppls {

/// Current version of the theta document layout. Readers reject other versions.
inline constexpr int kThetaFormatVersion = 1;

/// Serializes theta as
/// {
///   "format": "ppls-theta", "format_version": 1,
///   "dims": {"p": .., "q": .., "r": ..},
///   "x_loadings": [[..], ..],          // W, p rows of r entries
///   "y_loadings": [[..], ..],          // C, q rows of r entries
///   "inner_slopes": [..],              // diagonal of B
///   "score_variances": [..],           // diagonal of Sigma_t
///   "x_noise_variance": ..,            // sigma_e^2
///   "y_noise_variance": ..,            // sigma_f^2
///   "inner_noise_variance": ..         // sigma_h^2
/// }
/// Doubles are written in shortest round-trip form, so reading the document
/// back reproduces theta bit for bit.
std::string theta_to_json(const Theta& theta, int indent = 2);

Theta theta_from_json(const std::string& text);

void write_theta_file(const std::filesystem::path& path, const Theta& theta);
Theta read_theta_file(const std::filesystem::path& path);

}  // namespace ppls
