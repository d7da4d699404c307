// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "revode/cli.hpp"
#include "revode/config.hpp"
#include "revode/error.hpp"

using namespace revode;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "revode");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("revode_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string throws_message(RunConfig& cfg, const std::string& text) {
  try {
    apply_config_json(cfg, text);
  } catch (const InvalidParams& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config rejects unknown keys at every level") {
  auto cfg = default_run_config(StudyKind::roundtrip);
  CHECK(throws_message(cfg, R"({"sedes": 3})").find("sedes") != std::string::npos);
  CHECK(throws_message(cfg, R"({"field": {"dimm": 3}})").find("dimm") != std::string::npos);
  CHECK(throws_message(cfg, R"({"solvers": [{"name": "edict", "q": 1}]})").find("q") != std::string::npos);
  CHECK(throws_message(cfg, R"({"guidance": {"scale": [1]}})").find("scale") != std::string::npos);
  CHECK(throws_message(cfg, R"({"oracle": {"refine": 2}})").find("refine") != std::string::npos);
  CHECK(throws_message(cfg, R"({"schedule": {"kind": "linear_beta", "beta": 1}})").find("beta") !=
        std::string::npos);
  CHECK_FALSE(throws_message(cfg, R"({"seeds": "many"})").empty());
  CHECK_FALSE(throws_message(cfg, R"({"jobs": 2,)").empty());
}

TEST_CASE("config values are applied") {
  auto cfg = default_run_config(StudyKind::roundtrip);
  apply_config_json(cfg, R"({
    "seed": 11, "seeds": 4, "jobs": 3,
    "field": {"kind": "gaussian", "dim": 6},
    "solvers": [{"name": "edict", "p": 0.9, "label": "edict-09"}, "ddim"],
    "guidance": {"scales": [1, 2.5], "mode": "proximal"},
    "budget": 24
  })");
  const auto& l = cfg.lab;
  CHECK(l.seed == 11);
  CHECK(l.seeds == 4);
  CHECK(l.jobs == 3);
  CHECK(l.field.dim == 6);
  REQUIRE(l.solvers.size() == 2);
  CHECK(l.solvers[0].p == 0.9);
  CHECK(l.solvers[0].label == "edict-09");
  CHECK(l.solvers[1].kind == SolverKind::ddim);
  CHECK(l.guidance_scales == std::vector<double>{1.0, 2.5});
  CHECK(l.guidance_mode == GuidanceMode::proximal);
  CHECK(l.nfe_budget == 24);

  CHECK_THROWS_AS(apply_config_json(cfg, R"({"solvers": [{"name": "edict", "p": 0}]})"), InvalidParams);
  CHECK(parse_solver_list({"all"}).size() == solver_names().size());
  CHECK(parse_solver_list({"budget"}).size() == budget_solver_names().size());
  CHECK_THROWS_AS(parse_solver_list({"euler-maruyama"}), InvalidParams);
}

TEST_CASE("switching study in a config resets its defaults") {
  auto cfg = default_run_config(StudyKind::roundtrip);
  apply_config_json(cfg, R"({"study": "convergence"})");
  CHECK(cfg.study == StudyKind::convergence);
  CHECK(cfg.lab.steps.size() >= 4);
}

TEST_CASE("finalize resolves the output directory and validates") {
  auto cfg = default_run_config(StudyKind::convergence);
  cfg.out = "some/rel/../dir";
  finalize_config(cfg);
  CHECK(fs::path(cfg.out).is_absolute());
  CHECK(cfg.out.find("..") == std::string::npos);
  cfg.lab.steps = {8, 16, 32};
  CHECK_THROWS_AS(finalize_config(cfg), InvalidParams);
  auto rt = default_run_config(StudyKind::roundtrip);
  rt.lab.jobs = 0;
  CHECK_THROWS_AS(finalize_config(rt), InvalidParams);
}

TEST_CASE("solver and schedule JSON helpers") {
  const auto s = solver_from_json_text("mcf-euler", R"({"zeta": 0.5, "formulation": "lambda-eps"})");
  CHECK(s.zeta == 0.5);
  CHECK(s.formulation.param == Parametrisation::lambda_eps);
  CHECK_THROWS_AS(solver_from_json_text("ddim", R"({"formulation": "lambda-x0"})"), InvalidParams);
  CHECK(schedule_from_json_text(R"({"kind": "cosine"})").kind() == ScheduleKind::cosine);
  CHECK(schedule_from_json_text("").kind() == ScheduleKind::linear_beta);
}

TEST_CASE("cli: tableau") {
  auto r = cli({"tableau", "ees25"});
  CHECK(r.code == 0);
  CHECK(r.out.find("1/10") != std::string::npos);
  CHECK(r.out.find("1/8") != std::string::npos);

  r = cli({"tableau", "ees27", "--verify"});
  CHECK(r.code == 0);
  CHECK(r.out.find("verify") != std::string::npos);

  r = cli({"tableau", "ees25", "--x", "0.5"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("inadmissible parameter", 0) == 0);
  CHECK(r.err.find("inadmissible parameter: inadmissible") == std::string::npos);

  r = cli({"tableau", "heun17"});
  CHECK(r.code == 2);
}

TEST_CASE("cli: usage errors exit with 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"roundtrip", "--no-such-flag"}).code == 2);
  const auto dir = scratch("usage");
  auto r = cli({"roundtrip", "--out", dir.string(), "--solvers", ""});
  CHECK(r.code == 2);
  CHECK(r.err.find("empty solver list") != std::string::npos);
  r = cli({"roundtrip", "--out", dir.string(), "--solvers", "ees25", "--budget", "50"});
  CHECK(r.code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("cli: study runs write reports") {
  const auto dir = scratch("roundtrip");
  auto r = cli({"roundtrip", "--out", dir.string(), "--solvers", "ddim,edict", "--field", "rough",
                "--seeds", "2"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "roundtrip.csv"));
  CHECK(fs::exists(dir / "roundtrip.json"));
  CHECK(fs::exists(dir / "roundtrip.svg"));
  std::ifstream in(dir / "roundtrip.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == kReportHeader);

  const auto sdir = scratch("stability");
  r = cli({"stability", "--out", sdir.string(), "--method", "ees25,mcf-euler", "--res", "21"});
  CHECK(r.code == 0);
  CHECK(fs::exists(sdir / "stability.json"));
  CHECK(fs::exists(sdir / "stability.svg"));
  CHECK(fs::exists(sdir / "stability_ees25_polynomial.csv"));
}

TEST_CASE("cli: config file and study failure") {
  const auto dir = scratch("config");
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"study": "roundtrip", "seedz": 1})";
  }
  auto r = cli({"roundtrip", "--config", (dir / "bad.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("seedz") != std::string::npos);
  {
    std::ofstream f(dir / "coarse.json");
    f << R"({"solvers": ["ees25"], "steps": [8, 16, 32, 64], "oracle": {"refinement": 1}})";
  }
  r = cli({"convergence", "--config", (dir / "coarse.json").string(), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("oracle") != std::string::npos);
}

TEST_CASE("cli: output directory from the environment") {
  const auto dir = scratch("env");
  ::setenv("REVODE_OUT", dir.string().c_str(), 1);
  const auto r = cli({"roundtrip", "--solvers", "ddim"});
  ::unsetenv("REVODE_OUT");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "roundtrip.csv"));
}
