#include "ppls/theta_json.hpp"

#include "ppls/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ppls {

using nlohmann::json;

namespace {

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_array(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix read_matrix(const json& doc, const char* key, Eigen::Index rows, Eigen::Index cols) {
  const json& node = doc.at(key);
  if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != rows) {
    throw Error(ErrorCode::ParseError, std::string(key) + " must have " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = node[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::ParseError, std::string(key) + " row " + std::to_string(i) +
                                             " must have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

Vector read_vector(const json& doc, const char* key, Eigen::Index size) {
  const json& node = doc.at(key);
  if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != size) {
    throw Error(ErrorCode::ParseError, std::string(key) + " must have " + std::to_string(size) + " entries");
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = node[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string theta_to_json(const Theta& theta, int indent) {
  require_consistent_dims(theta);
  json doc;
  doc["format"] = "ppls-theta";
  doc["format_version"] = kThetaFormatVersion;
  doc["dims"] = {{"p", theta.p()}, {"q", theta.q()}, {"r", theta.r()}};
  doc["x_loadings"] = matrix_rows(theta.x_loadings);
  doc["y_loadings"] = matrix_rows(theta.y_loadings);
  doc["inner_slopes"] = vector_array(theta.inner_slopes);
  doc["score_variances"] = vector_array(theta.score_variances);
  doc["x_noise_variance"] = theta.x_noise_var;
  doc["y_noise_variance"] = theta.y_noise_var;
  doc["inner_noise_variance"] = theta.inner_noise_var;
  return doc.dump(indent);
}

Theta theta_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", std::string{}) != "ppls-theta") {
      throw Error(ErrorCode::ParseError, "not a ppls-theta document");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kThetaFormatVersion) {
      throw Error(ErrorCode::ParseError, "unsupported theta format_version " + std::to_string(version));
    }
    const auto p = doc.at("dims").at("p").get<Eigen::Index>();
    const auto q = doc.at("dims").at("q").get<Eigen::Index>();
    const auto r = doc.at("dims").at("r").get<Eigen::Index>();
    if (p < 1 || q < 1 || r < 1) throw Error(ErrorCode::ParseError, "dims must be positive");
    Theta theta;
    theta.x_loadings = read_matrix(doc, "x_loadings", p, r);
    theta.y_loadings = read_matrix(doc, "y_loadings", q, r);
    theta.inner_slopes = read_vector(doc, "inner_slopes", r);
    theta.score_variances = read_vector(doc, "score_variances", r);
    theta.x_noise_var = doc.at("x_noise_variance").get<double>();
    theta.y_noise_var = doc.at("y_noise_variance").get<double>();
    theta.inner_noise_var = doc.at("inner_noise_variance").get<double>();
    return theta;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

void write_theta_file(const std::filesystem::path& path, const Theta& theta) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << theta_to_json(theta) << '\n';
}

Theta read_theta_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return theta_from_json(buffer.str());
}

}  // namespace ppls
