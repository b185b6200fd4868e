#include "ppls/scenario_io.hpp"

#include "ppls/csv.hpp"
#include "ppls/error.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ppls {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario key '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw Error(ErrorCode::ParseError, where + ": unknown key '" + item.key() + "'");
    }
  }
}

}  // namespace

ScenarioConfig scenario_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario config: ") + e.what());
  }
  check_keys(j,
             {"schema_version", "n", "p", "q", "r", "noise_level", "distribution", "replicates",
              "base_seed", "estimators", "loading_shift", "threads", "max_failed_fraction", "fit"},
             "scenario config");
  ScenarioConfig c;
  if (j.contains("schema_version") && get_as<int>(j, "schema_version") != kScenarioSchemaVersion) {
    throw Error(ErrorCode::ParseError, "unsupported scenario schema_version");
  }
  if (j.contains("n")) c.n = get_as<Eigen::Index>(j, "n");
  if (j.contains("p")) c.p = get_as<Eigen::Index>(j, "p");
  if (j.contains("q")) c.q = get_as<Eigen::Index>(j, "q");
  if (j.contains("r")) c.r = get_as<Eigen::Index>(j, "r");
  if (j.contains("noise_level")) c.noise_level = get_as<double>(j, "noise_level");
  if (j.contains("distribution")) {
    c.distribution = latent_distribution_from_string(get_as<std::string>(j, "distribution"));
  }
  if (j.contains("replicates")) c.replicates = get_as<int>(j, "replicates");
  if (j.contains("base_seed")) c.base_seed = get_as<std::uint64_t>(j, "base_seed");
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "estimators")) {
      c.estimators.push_back(estimator_from_string(name));
    }
  }
  if (j.contains("loading_shift")) {
    const auto s = get_as<std::string>(j, "loading_shift");
    if (s == "component") c.loading_shift = LoadingShift::Component;
    else if (s == "entry") c.loading_shift = LoadingShift::Entry;
    else throw Error(ErrorCode::ParseError, "loading_shift must be 'component' or 'entry'");
  }
  if (j.contains("threads")) c.threads = get_as<int>(j, "threads");
  if (j.contains("max_failed_fraction")) {
    c.max_failed_fraction = get_as<double>(j, "max_failed_fraction");
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, {"max_iter", "tol_loglik", "orthogonalization", "seed"}, "scenario fit");
    if (f.contains("max_iter")) c.fit.max_iter = get_as<int>(f, "max_iter");
    if (f.contains("tol_loglik")) c.fit.tol_loglik = get_as<double>(f, "tol_loglik");
    if (f.contains("orthogonalization")) {
      c.fit.orthogonalization =
          orthogonalization_from_string(get_as<std::string>(f, "orthogonalization"));
    }
    if (f.contains("seed")) c.fit.seed = get_as<std::uint64_t>(f, "seed");
  }
  validate_config(c);
  return c;
}

ScenarioConfig read_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return scenario_config_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

std::string scenario_config_to_json(const ScenarioConfig& c, int indent) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["n"] = c.n;
  j["p"] = c.p;
  j["q"] = c.q;
  j["r"] = c.r;
  j["noise_level"] = c.noise_level;
  j["distribution"] = to_string(c.distribution);
  j["replicates"] = c.replicates;
  j["base_seed"] = c.base_seed;
  json est = json::array();
  for (Estimator e : c.estimators) est.push_back(to_string(e));
  j["estimators"] = est;
  j["loading_shift"] = c.loading_shift == LoadingShift::Component ? "component" : "entry";
  j["threads"] = c.threads;
  j["max_failed_fraction"] = c.max_failed_fraction;
  j["fit"] = {{"max_iter", c.fit.max_iter},
              {"tol_loglik", c.fit.tol_loglik},
              {"orthogonalization", to_string(c.fit.orthogonalization)},
              {"seed", c.fit.seed}};
  return j.dump(indent);
}

namespace {

struct TidyWriter {
  std::ofstream out;
  explicit TidyWriter(const std::filesystem::path& path) : out(path, std::ios::binary) {
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << "estimator,matrix,row,component,statistic,value\n";
  }
  void row(const std::string& est, const std::string& matrix, const std::string& r,
           const std::string& k, const std::string& stat, const std::string& value) {
    out << est << ',' << matrix << ',' << r << ',' << k << ',' << stat << ',' << value << '\n';
  }
  void matrix(const std::string& est, const std::string& name, const Matrix& m,
              const std::string& stat, bool available) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        row(est, name, std::to_string(i + 1), std::to_string(k + 1), stat,
            available ? format_double(m(i, k)) : "NA");
      }
    }
  }
};

// "b2" -> ("B", "2", "2"), "sigma_e" -> ("sigma_e", "NA", "NA")
void parameter_location(const std::string& name, std::string& matrix, std::string& row,
                        std::string& comp) {
  for (const char* prefix : {"b", "sigma_t"}) {
    const std::string p = prefix;
    if (name.size() > p.size() && name.compare(0, p.size(), p) == 0 &&
        std::isdigit(static_cast<unsigned char>(name[p.size()]))) {
      matrix = p == "b" ? "B" : "sigma_t";
      row = comp = name.substr(p.size());
      return;
    }
  }
  matrix = name;
  row = comp = "NA";
}

}  // namespace

void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  TidyWriter bias(dir / "bias.csv");
  TidyWriter variance(dir / "variance.csv");
  for (const EstimatorResult& er : result.estimators) {
    const std::string est = to_string(er.estimator);
    bias.matrix(est, "W", er.loadings.bias_w, "bias", true);
    bias.matrix(est, "C", er.loadings.bias_c, "bias", true);
    variance.matrix(est, "W", er.loadings.variance_w, "variance", er.has_variance);
    variance.matrix(est, "C", er.loadings.variance_c, "variance", er.has_variance);
    for (const RelativeSummary& s : er.variance_parameters) {
      std::string matrix, row, comp;
      parameter_location(s.name, matrix, row, comp);
      bias.row(est, matrix, row, comp, "relative_bias", format_double(s.relative_bias));
      variance.row(est, matrix, row, comp, "relative_variance",
                   s.relative_variance ? format_double(*s.relative_variance) : "NA");
    }
  }

  json ordering;
  ordering["schema_version"] = kScenarioSchemaVersion;
  ordering["replicates"] = result.config.replicates;
  json ests = json::array();
  for (const EstimatorResult& er : result.estimators) {
    ests.push_back({{"estimator", to_string(er.estimator)},
                    {"ordering_correct_proportion", er.ordering_correct_proportion},
                    {"successful_replicates", er.successful},
                    {"failed_replicates", er.failed},
                    {"not_converged_replicates", er.not_converged}});
  }
  ordering["estimators"] = ests;
  std::ofstream out(dir / "ordering.json");
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write ordering.json");
  out << ordering.dump(2) << '\n';
}

}  // namespace ppls
