#include "doctest.h"
#include "support.hpp"

#include "ppls/csv.hpp"
#include "ppls/error.hpp"
#include "ppls/scenario_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ppls;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ppls_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_message(const std::string& text, const std::string& source) {
  try {
    parse_csv_matrix(text, source);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    return e.what();
  }
  FAIL("no error raised");
  return {};
}

}  // namespace

TEST_CASE("csv round trip is bit exact") {
  std::mt19937_64 rng(500);
  Matrix m = testing::random_normal(17, 4, rng);
  m(0, 0) = 1e-300;
  m(1, 1) = -123456789.125;
  m(2, 2) = 0.1;
  const fs::path dir = scratch_dir("roundtrip");
  write_csv_matrix(dir / "m.csv", {"a", "b,c", "d\"e", "f"}, m);
  const CsvMatrix back = read_csv_matrix(dir / "m.csv");
  CHECK(back.header == std::vector<std::string>{"a", "b,c", "d\"e", "f"});
  CHECK((back.values - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv parsing details") {
  const CsvMatrix m = parse_csv_matrix("\xEF\xBB\xBFx,\"y\"\r\n1,+2\r\n\"3.5\",-4e1\r\n");
  CHECK(m.header == std::vector<std::string>{"x", "y"});
  REQUIRE(m.values.rows() == 2);
  CHECK(m.values(0, 1) == 2.0);
  CHECK(m.values(1, 0) == 3.5);
  CHECK(m.values(1, 1) == -40.0);

  const auto rec = parse_csv_records("a,\"b\"\"c\",\"line\nbreak\"\n");
  REQUIRE(rec.size() == 1);
  CHECK(rec[0][1] == "b\"c");
  CHECK(rec[0][2] == "line\nbreak");
  CHECK(format_double(0.1) == "0.1");
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
}

TEST_CASE("csv errors name the file, row and column") {
  const std::string msg = error_message("a,b\n1,2\n3,oops\n", "x.csv");
  CHECK(msg.find("x.csv") != std::string::npos);
  CHECK(msg.find("row 3") != std::string::npos);
  CHECK(msg.find("column 2") != std::string::npos);

  const std::string ragged = error_message("a,b\n1,2\n3\n", "y.csv");
  CHECK(ragged.find("row 3") != std::string::npos);

  error_message("a,b\n1,2x\n", "z.csv");
  error_message("a,b\n1,\n", "z.csv");
  error_message("a,\"b\n1,2\n", "z.csv");
  error_message("a,b\n1,nan\n", "z.csv");
  CHECK_THROWS_AS(read_csv_matrix("/nonexistent/ppls.csv"), Error);
}

TEST_CASE("scenario config parsing") {
  const ScenarioConfig c = scenario_config_from_json(R"({
    "schema_version": 1, "n": 50, "p": 10, "q": 12, "r": 2, "noise_level": 0.5,
    "distribution": "poisson", "replicates": 7, "base_seed": 9,
    "estimators": ["pls"], "fit": {"max_iter": 50, "orthogonalization": "cholesky"}
  })");
  CHECK(c.n == 50);
  CHECK(c.q == 12);
  CHECK(c.distribution == LatentDistribution::Poisson1);
  CHECK(c.estimators == std::vector<Estimator>{Estimator::Pls});
  CHECK(c.fit.max_iter == 50);
  CHECK(c.fit.orthogonalization == Orthogonalization::CholeskyLower);
  CHECK(c.base_seed == 9);

  CHECK_THROWS_AS(scenario_config_from_json(R"({"replicate": 5})"), Error);
  CHECK_THROWS_AS(scenario_config_from_json(R"({"fit": {"tol": 1}})"), Error);
  CHECK_THROWS_AS(scenario_config_from_json(R"({"schema_version": 2})"), Error);
  CHECK_THROWS_AS(scenario_config_from_json(R"({"n": "many"})"), Error);
  CHECK_THROWS_AS(scenario_config_from_json("{"), Error);

  const ScenarioConfig again = scenario_config_from_json(scenario_config_to_json(c));
  CHECK(scenario_config_to_json(again) == scenario_config_to_json(c));
}

TEST_CASE("scenario outputs") {
  ScenarioConfig cfg;
  cfg.n = 80;
  cfg.p = 8;
  cfg.q = 8;
  cfg.r = 2;
  cfg.replicates = 1;
  const ScenarioResult res = run_scenario(cfg);
  const fs::path dir = scratch_dir("scenario");
  write_scenario_outputs(res, dir);

  const auto bias = parse_csv_records(slurp(dir / "bias.csv"));
  const auto var = parse_csv_records(slurp(dir / "variance.csv"));
  const std::vector<std::string> header{"estimator", "matrix", "row", "component", "statistic", "value"};
  CHECK(bias[0] == header);
  CHECK(var[0] == header);
  // (8 + 8) * 2 loading entries per estimator, plus PPLS parameter rows
  CHECK(bias.size() == 1 + 2 * 32 + (2 + 2 + 3));
  for (std::size_t i = 1; i < var.size(); ++i) CHECK(var[i][5] == "NA");
  CHECK(bias[1][0] == "ppls");
  CHECK(bias[1][1] == "W");
  CHECK(bias[1][2] == "1");
  CHECK(bias[1][3] == "1");
  CHECK(std::stod(bias[1][5]) == res.estimators[0].loadings.bias_w(0, 0));

  const auto ordering = nlohmann::json::parse(slurp(dir / "ordering.json"));
  CHECK(ordering["schema_version"] == 1);
  CHECK(ordering["estimators"].size() == 2);
  CHECK(ordering["estimators"][1]["estimator"] == "pls");
}
