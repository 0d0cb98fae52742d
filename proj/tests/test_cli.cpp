#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int status = -1;
  std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::path log = scratch / "cmd.log";
  std::string cmd = std::string(HOLORAY_CLI_BIN) + " " + args + " > " +
                    log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  CmdResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("holoray-cli-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string identities_config(const std::string& output_dir) {
  return R"({
  "model": "flat-torus",
  "pair": {"name": "trivial"},
  "grid": {"n1": 12, "n2": 12, "ntheta": 16},
  "ray": {"h": 0.001, "t_max": 30.0, "tol_exit": 1e-10},
  "experiment": "identities",
  "seed": 0,
  "output_dir": ")" + output_dir + R"("
})";
}

}  // namespace

TEST_CASE("list-presets names both models and is byte-identical across runs") {
  fs::path dir = fresh_dir("presets");
  CmdResult a = run_cli("list-presets", dir);
  CHECK(a.status == 0);
  CHECK(a.output.find("catenoid") != std::string::npos);
  CHECK(a.output.find("flat-torus") != std::string::npos);
  CHECK(a.output.find("identities") != std::string::npos);
  CmdResult b = run_cli("list-presets", dir);
  CHECK(b.status == 0);
  CHECK(a.output == b.output);
}

TEST_CASE("identities run on the flat torus passes every check") {
  fs::path dir = fresh_dir("identities");
  fs::path out = dir / "out";
  write_file(dir / "cfg.json", identities_config(out.string()));
  CmdResult r = run_cli("run " + (dir / "cfg.json").string(), dir);
  CHECK(r.status == 0);
  REQUIRE(fs::exists(out / "summary.json"));
  REQUIRE(fs::exists(out / "manifest.json"));
  REQUIRE(fs::exists(out / "identities.csv"));
  auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary.at("pass").get<bool>());
  REQUIRE(!summary.at("checks").empty());
  for (const auto& c : summary.at("checks")) {
    CHECK(c.at("pass").get<bool>());
    CHECK(c.at("value").get<double>() < c.at("tolerance").get<double>());
  }
  auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  for (const auto& c : manifest.at("checks"))
    CHECK(!c.at("verifies").get<std::string>().empty());
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  fs::path dir = fresh_dir("determinism");
  fs::path out1 = dir / "out1";
  fs::path out2 = dir / "out2";
  write_file(dir / "cfg1.json", identities_config(out1.string()));
  write_file(dir / "cfg2.json", identities_config(out2.string()));
  CHECK(run_cli("run " + (dir / "cfg1.json").string(), dir).status == 0);
  CHECK(run_cli("run " + (dir / "cfg2.json").string(), dir).status == 0);
  std::string s1 = read_file(out1 / "summary.json");
  std::string s2 = read_file(out2 / "summary.json");
  // output_dir differs inside the config echo; compare everything else
  auto j1 = nlohmann::json::parse(s1);
  auto j2 = nlohmann::json::parse(s2);
  CHECK(j1 == j2);
  CHECK(read_file(out1 / "identities.csv") == read_file(out2 / "identities.csv"));
  CHECK(read_file(out1 / "manifest.json") == read_file(out2 / "manifest.json"));
}

TEST_CASE("malformed config yields a parse diagnostic and no outputs") {
  fs::path dir = fresh_dir("malformed");
  fs::path out = dir / "out";
  write_file(dir / "bad.json", R"({
  "model": "catenoid",
  "pair": {"name": "trivial"},
  "grid": {"n1": 12, "n2": 12, "ntheta": -16},
  "ray": {"h": 0.001, "t_max": 30.0, "tol_exit": 1e-10},
  "experiment": "identities",
  "seed": 0,
  "output_dir": ")" + out.string() + R"("
})");
  CmdResult r = run_cli("run " + (dir / "bad.json").string(), dir);
  CHECK(r.status == 2);
  CHECK(r.output.find("grid.ntheta") != std::string::npos);
  CHECK(!fs::exists(out));
}

TEST_CASE("unknown keys are rejected with the offending key named") {
  fs::path dir = fresh_dir("unknown-key");
  fs::path out = dir / "out";
  write_file(dir / "bad.json", R"({
  "model": "flat-torus",
  "pair": {"name": "trivial"},
  "grid": {"n1": 12, "n2": 12, "ntheta": 16},
  "ray": {"h": 0.001, "t_max": 30.0, "tol_exit": 1e-10},
  "experiment": "identities",
  "seed": 0,
  "output_dir": ")" + out.string() + R"(",
  "grid_size": 64
})");
  CmdResult r = run_cli("run " + (dir / "bad.json").string(), dir);
  CHECK(r.status == 2);
  CHECK(r.output.find("grid_size") != std::string::npos);
  CHECK(!fs::exists(out));
}

TEST_CASE("check validates a config without producing outputs") {
  fs::path dir = fresh_dir("check");
  fs::path out = dir / "out";
  write_file(dir / "cfg.json", identities_config(out.string()));
  CmdResult r = run_cli("check " + (dir / "cfg.json").string(), dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("OK") != std::string::npos);
  CHECK(!fs::exists(out));
}

TEST_CASE("a failed tagged check sets a nonzero exit status") {
  fs::path dir = fresh_dir("fail");
  fs::path out = dir / "out";
  // a 2-iteration reconstruction cannot reach 5% error
  write_file(dir / "cfg.json", R"({
  "model": "catenoid",
  "pair": {"name": "trivial"},
  "grid": {"n1": 10, "n2": 11, "ntheta": 12},
  "ray": {"h": 0.01, "t_max": 40.0, "tol_exit": 1e-10},
  "experiment": "reconstruct",
  "seed": 0,
  "output_dir": ")" + out.string() + R"(",
  "boundary": {"nu": 8, "ntheta": 12},
  "max_iter": 2
})");
  CmdResult r = run_cli("run " + (dir / "cfg.json").string(), dir);
  CHECK(r.status == 1);
  REQUIRE(fs::exists(out / "summary.json"));
  auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(!summary.at("pass").get<bool>());
  REQUIRE(fs::exists(out / "trace.csv"));
  REQUIRE(fs::exists(out / "coefficients.csv"));
}

TEST_CASE("scatter against a gauged copy records a vanishing data distance") {
  fs::path dir = fresh_dir("scatter-gauge");
  fs::path out = dir / "out";
  write_file(dir / "cfg.json", R"({
  "model": "catenoid",
  "pair": {"name": "u1-bump"},
  "grid": {"n1": 12, "n2": 9, "ntheta": 16},
  "ray": {"h": 0.002, "t_max": 40.0, "tol_exit": 1e-10},
  "experiment": "scatter",
  "seed": 0,
  "output_dir": ")" + out.string() + R"(",
  "gauge": {"name": "u1-phase", "amplitude": 0.5}
})");
  CmdResult r = run_cli("run " + (dir / "cfg.json").string(), dir);
  CHECK(r.status == 0);
  auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary.at("results").at("distance_sup").get<double>() < 1e-6);
}

TEST_CASE("gauge-test records scattering invariance under a boundary-trivial gauge") {
  fs::path dir = fresh_dir("gauge");
  fs::path out = dir / "out";
  write_file(dir / "cfg.json", R"({
  "model": "catenoid",
  "pair": {"name": "u1-bump"},
  "grid": {"n1": 12, "n2": 9, "ntheta": 16},
  "ray": {"h": 0.002, "t_max": 40.0, "tol_exit": 1e-10},
  "experiment": "gauge-test",
  "seed": 0,
  "output_dir": ")" + out.string() + R"(",
  "gauge": {"name": "u1-phase", "amplitude": 0.5}
})");
  CmdResult r = run_cli("run " + (dir / "cfg.json").string(), dir);
  CHECK(r.status == 0);
  auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary.at("results").at("distance_sup").get<double>() < 1e-6);
  REQUIRE(fs::exists(out / "scattering.csv"));
  REQUIRE(fs::exists(out / "rays.csv"));
}
