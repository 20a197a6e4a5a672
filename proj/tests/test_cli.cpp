// Integration tests that drive the relsens binary end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

using json = nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(RELSENS_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string config_dir() { return std::string(RELSENS_SOURCE_DIR) + "/configs"; }

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = std::string(P_tmpdir) + "/relsens_test_" + name;
  std::ofstream f(path);
  f << text;
  return path;
}

const char* kTinyConfig = R"(
[variables]
U1 = normal(0, 1)
U2 = normal(0, 1)
[limit_states]
g1 = 2 - 0.70710678118654752*U1 - 0.70710678118654752*U2
g2 = 2.5 - U2
[system]
mode = series
[mvn]
n_samples = 120000
replicates = 10
seed = 42
)";

}  // namespace

TEST_CASE("validate reports counts on the bundled configs") {
  for (const char* name : {"frame.cfg", "parabola.cfg", "beambar_gaussian.cfg",
                           "beambar_nongaussian.cfg", "illustrative.cfg"}) {
    const RunResult r = run_cli("validate " + config_dir() + "/" + name);
    CHECK_MESSAGE(r.exit_code == 0, name, ": ", r.output);
    CHECK(r.output.find("OK") == 0);
  }
  const RunResult frame = run_cli("validate " + config_dir() + "/frame.cfg");
  CHECK(frame.output.find("OK, 4 limit states, 4 variables") == 0);
}

TEST_CASE("validation failures exit with code 2") {
  const std::string bad = write_temp("bad.cfg", R"(
[variables]
a = normal(0,1)
[limit_states]
g = a + missing_name
[system]
mode = component
)");
  const RunResult r = run_cli("analyze " + bad);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("missing_name") != std::string::npos);

  const RunResult missing = run_cli("analyze /nonexistent/path.cfg");
  CHECK(missing.exit_code == 2);
}

TEST_CASE("analyze produces a schema-tagged JSON report") {
  const std::string cfg = write_temp("tiny.cfg", kTinyConfig);
  const RunResult r = run_cli("analyze " + cfg + " --format json");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("tool").at("name") == "relsens");
  CHECK(j.at("probability").at("mode") == "series");
  const double p = j.at("probability").at("form").at("value").get<double>();
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  CHECK(j.at("config").at("variables").size() == 2);
  CHECK(j.at("design_points").size() == 2);
  CHECK(j.at("sensitivity").at("first_order").contains("U1"));
}

TEST_CASE("reports are byte-identical for a fixed seed, modulo the timestamp") {
  const std::string cfg = write_temp("tiny.cfg", kTinyConfig);
  const RunResult a = run_cli("analyze " + cfg + " --format json");
  const RunResult b = run_cli("analyze " + cfg + " --format json");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  json ja = json::parse(a.output);
  json jb = json::parse(b.output);
  ja.erase("timestamp");
  jb.erase("timestamp");
  CHECK(ja.dump() == jb.dump());

  // A different seed changes the estimates.
  const RunResult c = run_cli("analyze " + cfg + " --format json --seed 7");
  json jc = json::parse(c.output);
  CHECK(jc.at("probability").at("form").at("value") !=
        ja.at("probability").at("form").at("value"));
}

TEST_CASE("CSV values round-trip to the JSON report bit-exactly") {
  const std::string cfg = write_temp("tiny.cfg", kTinyConfig);
  const RunResult jr = run_cli("analyze " + cfg + " --format json");
  const RunResult cr = run_cli("analyze " + cfg + " --format csv");
  REQUIRE(jr.exit_code == 0);
  REQUIRE(cr.exit_code == 0);
  const json j = json::parse(jr.output);

  std::istringstream lines(cr.output);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "quantity,value,std_error");
  bool saw_p = false, saw_s = false;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string name, value, se;
    std::getline(cells, name, ',');
    std::getline(cells, value, ',');
    std::getline(cells, se, ',');
    if (name == "p_form") {
      CHECK(std::stod(value) == j.at("probability").at("form").at("value").get<double>());
      saw_p = true;
    }
    if (name == "S_U1") {
      CHECK(std::stod(value) ==
            j.at("sensitivity").at("first_order").at("U1").at("value").get<double>());
      saw_s = true;
    }
  }
  CHECK(saw_p);
  CHECK(saw_s);
}

TEST_CASE("sweep emits a well-formed CSV over the grid") {
  const RunResult r = run_cli("sweep " + config_dir() +
                              "/illustrative.cfg --param theta --from 0 --to 90 --steps 3 "
                              "--mvn-samples 100000");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string header;
  std::getline(lines, header);
  CHECK(header.find("theta,p_series,p_series_se,p_parallel") == 0);
  CHECK(header.find("ST_parallel_U2_se") != std::string::npos);
  int rows = 0;
  std::string line;
  double first_p_series = -1.0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    if (rows == 1) {
      std::istringstream cells(line);
      std::string cell;
      std::getline(cells, cell, ',');
      CHECK(std::stod(cell) == 0.0);
      std::getline(cells, cell, ',');
      first_p_series = std::stod(cell);
    }
  }
  CHECK(rows == 3);
  // theta = 0: both components coincide, so the series probability is the
  // component probability Phi(-2).
  CHECK(first_p_series == doctest::Approx(0.022750131948179195).epsilon(1e-9));
}

TEST_CASE("sweep validation failures exit with code 2") {
  const RunResult empty = run_cli("sweep " + config_dir() +
                                  "/illustrative.cfg --param theta --from 0 --to 90 --steps 0");
  CHECK(empty.exit_code == 2);
  const RunResult unknown = run_cli("sweep " + config_dir() +
                                    "/illustrative.cfg --param nope --from 0 --to 1 --steps 2");
  CHECK(unknown.exit_code == 2);
}

TEST_CASE("--out writes the report to a file") {
  const std::string cfg = write_temp("tiny.cfg", kTinyConfig);
  const std::string out = std::string(P_tmpdir) + "/relsens_test_report.json";
  std::remove(out.c_str());
  const RunResult r = run_cli("analyze " + cfg + " --format json --out " + out);
  REQUIRE(r.exit_code == 0);
  std::ifstream f(out);
  REQUIRE(f.good());
  json j;
  f >> j;
  CHECK(j.at("schema_version") == 1);
}

TEST_CASE("version flag") {
  const RunResult r = run_cli("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1.0.0") != std::string::npos);
}
