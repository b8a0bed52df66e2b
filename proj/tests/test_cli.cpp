#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "mlab/cli.hpp"
#include "mlab/error.hpp"

using namespace mlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mlab_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_cfg(const fs::path& dir, const std::string& text) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = run_cli(args, o, e);
  return {c, o.str(), e.str()};
}

const char* kTyGrid = R"J("grid": {"h": 0.1, "dims": [{"role": "t", "points": 16, "extent": 1.5, "periodic": false},
                                         {"role": "y", "points": 8, "extent": 1.5}]})J";

}  // namespace

TEST_CASE("schema validation") {
  ::unsetenv("MLAB_OUT");
  CHECK_NOTHROW(validate_config_text(R"J({"model": "free"})J"));
  CHECK_NOTHROW(validate_config_text(R"J({"model": {"p2": "xi1^2", "p1": "tau"}, "seed": 3})J"));
  CHECK_THROWS_AS(validate_config_text(R"J({"model": )J"), ConfigError);
  try {
    validate_config_text(R"J({"model": "free", "estimate": {"tests": 0}})J");
    FAIL("expected a schema error");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "/estimate/tests");
  }
  try {
    validate_config_text(R"J({"model": {"A": "0"}})J");
    FAIL("expected a schema error");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "/model");
  }
  CHECK_THROWS_AS(validate_config_text(R"J({"colour": 1})J"), ConfigError);
  CHECK_THROWS_AS(validate_config_text(R"J({"grid": {"dims": [{"role": "z", "points": 8, "extent": 1}]}})J"),
                  ConfigError);
}

TEST_CASE("check: checkerboard violates and writes witnesses") {
  auto d = scratch("cb");
  auto r = run({"check", "--config", write_cfg(d, R"J({"model": "checkerboard"})J").string(), "--out",
                (d / "out").string()});
  CHECK(r.code == kExitViolation);
  auto rep = nlohmann::json::parse(slurp(d / "out/reports/check.json"));
  CHECK(rep["condition"]["verdict"] == "fail-leaf-sign");
  CHECK(rep["condition"]["violation_count"].get<int>() > 0);
  const std::string w = slurp(d / "out/fields/witnesses.csv");
  CHECK(w.rfind("kind,", 0) == 0);
  CHECK(w.find("mixed-leaf") != std::string::npos);
  CHECK(fs::is_directory(d / "out/plots"));
}

TEST_CASE("check + estimate on an inline solvable model") {
  auto d = scratch("ty");
  const std::string cfg = std::string(R"J({"model": {"A": "0", "f": "t*abs(eta1)"}, )J") + kTyGrid +
                          R"J(, "checks": {"weights": true, "estimate": true}, "estimate": {"kind": "packet-scan"}})J";
  auto r = run({"check", "--config", write_cfg(d, cfg).string(), "--out", (d / "out").string()});
  CHECK(r.code == kExitPass);
  auto rep = nlohmann::json::parse(slurp(d / "out/reports/check.json"));
  CHECK(rep["condition"]["verdict"] == "pass");
  CHECK(rep["estimate"]["pass"] == true);
  CHECK(fs::exists(d / "out/fields/m.csv"));
  CHECK(fs::exists(d / "out/plots/estimate_T0.dat"));
}

TEST_CASE("estimate: Mizohata fails") {
  auto d = scratch("miz");
  auto r = run({"estimate", "--config",
                write_cfg(d, R"J({"model": "mizohata_unsolvable", "estimate": {"kind": "packet-scan"}})J").string(),
                "--out", (d / "out").string()});
  CHECK(r.code == kExitViolation);
  CHECK(r.err.find("<= 0") != std::string::npos);
  auto rep = nlohmann::json::parse(slurp(d / "out/reports/estimate.json"));
  CHECK(rep["estimate"]["pass"] == false);
  CHECK(rep["estimate"]["sweep"][0]["failing_row"].get<int>() >= 0);
}

TEST_CASE("error exits") {
  auto d = scratch("err");
  fs::path bad = d / "bad.json";
  std::ofstream(bad) << "{\"model\": ";
  CHECK(run({"check", "--config", bad.string(), "--out", (d / "o").string()}).code == kExitError);
  CHECK(run({"check", "--config", write_cfg(d, R"J({"model": {"A": "0"}})J").string()}).code == kExitError);
  auto z = run({"estimate", "--config", write_cfg(d, R"J({"model": "free", "estimate": {"tests": 0}})J").string(),
                "--out", (d / "o").string()});
  CHECK(z.code == kExitError);
  CHECK(z.err.find("/estimate/tests") != std::string::npos);
  // inline models need a grid
  CHECK(run({"check", "--config", write_cfg(d, R"J({"model": {"f": "t"}})J").string(), "--out", (d / "o").string()})
            .code == kExitError);
  // unknown gallery name, bad expression, principal form for the estimate
  CHECK(run({"check", "--config", write_cfg(d, R"J({"model": "nope"})J").string(), "--out", (d / "o").string()})
            .code == kExitError);
  auto pe = run({"check", "--config",
                 write_cfg(d, std::string(R"J({"model": {"f": "t*("}, )J") + kTyGrid + "}").string(), "--out",
                 (d / "o").string()});
  CHECK(pe.code == kExitError);
  CHECK(pe.err.find("/model/f") != std::string::npos);
  CHECK(run({"estimate", "--config", write_cfg(d, R"J({"model": "p_plus"})J").string(), "--out", (d / "o").string()})
            .code == kExitError);
  CHECK(run({"estimate"}).code == kExitError);
  CHECK(run({"frobnicate"}).code == kExitError);
  CHECK(run({"gallery", "--jobs", "0"}).code == kExitError);
}

TEST_CASE("prep: linear case converges in one step") {
  auto d = scratch("prep");
  auto r = run({"prep", "--config",
                write_cfg(d, R"J({"prep": {"L": [[1, 0], [0, 1]], "u0": 0.3, "u1": [0.2, 0.5], "imC": ["0.4", "-0.1"],
                                 "f": "-0.06", "points": 32}})J")
                    .string(),
                "--out", (d / "out").string()});
  CHECK(r.code == kExitPass);
  const std::string h = slurp(d / "out/fields/prep_history_k0.csv");
  CHECK(h.rfind("iteration,step_h2,v_h2,residual\n1,", 0) == 0);
  CHECK(std::count(h.begin(), h.end(), '\n') == 2);
  auto rep = nlohmann::json::parse(slurp(d / "out/reports/prep.json"));
  CHECK(rep["components"][0]["iterations"] == 1);
  CHECK(rep["components"][0]["value_at_x0"].get<double>() == 0.3);
  CHECK(fs::exists(d / "out/fields/chi_k0.csv"));
}

TEST_CASE("prep: all components without u1, divergence exits 2") {
  auto d = scratch("prep2");
  auto r = run({"prep", "--config",
                write_cfg(d, R"J({"prep": {"L": [[1, 0], [0, -1]], "points": 24}})J").string(), "--out",
                (d / "out").string(), "--jobs", "2"});
  CHECK(r.code == kExitPass);
  CHECK(fs::exists(d / "out/fields/chi_k0.csv"));
  CHECK(fs::exists(d / "out/fields/chi_k1.csv"));
  auto big = run({"prep", "--config",
                  write_cfg(d, R"J({"prep": {"L": [[1, 0], [0, -1]], "u0": 0.25, "u1": [1, 0], "imC": ["0.1", "0.05"],
                                   "f": "5*exp(-4*(x1^2 + x2^2))", "points": 32, "max_iter": 30}})J")
                      .string(),
                  "--out", (d / "out2").string()});
  CHECK(big.code == kExitViolation);
  auto rep = nlohmann::json::parse(slurp(d / "out2/reports/prep.json"));
  CHECK(rep["components"][0]["converged"] == false);
  CHECK(rep["components"][0]["history"].size() == 30);
}

TEST_CASE("determinism, seed override and MLAB_OUT") {
  auto d = scratch("det");
  auto cfg = write_cfg(d, R"J({"model": "q_minus_solvable", "estimate": {"tests": 20}, "seed": 11})J").string();
  CHECK(run({"estimate", "--config", cfg, "--out", (d / "a").string(), "--jobs", "3"}).code == kExitPass);
  CHECK(run({"estimate", "--config", cfg, "--out", (d / "b").string(), "--jobs", "1"}).code == kExitPass);
  const std::string a = slurp(d / "a/reports/estimate.json");
  CHECK(!a.empty());
  CHECK(a == slurp(d / "b/reports/estimate.json"));
  CHECK(slurp(d / "a/plots/estimate_T1.dat") == slurp(d / "b/plots/estimate_T1.dat"));
  CHECK(run({"estimate", "--config", cfg, "--out", (d / "c").string(), "--seed", "12"}).code == kExitPass);
  auto c = nlohmann::json::parse(slurp(d / "c/reports/estimate.json"));
  CHECK(c["estimate"]["seed"] == 12);
  CHECK(slurp(d / "c/reports/estimate.json") != a);

  ::setenv("MLAB_OUT", (d / "env").c_str(), 1);
  CHECK(run({"estimate", "--config", cfg, "--out", (d / "ignored").string()}).code == kExitPass);
  ::unsetenv("MLAB_OUT");
  CHECK(slurp(d / "env/reports/estimate.json") == a);
  CHECK(!fs::exists(d / "ignored"));
}

TEST_CASE("gallery and quantize-demo") {
  auto d = scratch("gal");
  auto g = run({"gallery", "--out", (d / "g").string(), "--jobs", "4"});
  CHECK(g.code == kExitPass);
  auto rep = nlohmann::json::parse(slurp(d / "g/reports/gallery.json"));
  CHECK(rep["all_match"] == true);
  CHECK(rep["models"].size() == 8);
  auto q = run({"quantize-demo", "--config",
                write_cfg(d, R"J({"quantize": {"symbol": "tau^2", "quantization": "weyl",
                                "compose": {"a": "sin(t)", "b": "tau"}}})J")
                    .string(),
                "--out", (d / "q").string()});
  CHECK(q.code == kExitPass);
  auto qr = nlohmann::json::parse(slurp(d / "q/reports/quantize.json"));
  CHECK(qr["hermitian_min_eigenvalue"].get<double>() >= -1e-9);
  CHECK(qr["compose"]["ratio"].size() == 2);
  CHECK(fs::exists(d / "q/plots/quantize_spectrum.dat"));
  CHECK(run({"--help"}).code == kExitPass);
}
