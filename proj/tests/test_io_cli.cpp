#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vecadvect/analytic.hpp"
#include "vecadvect/field.hpp"
#include "vecadvect/grid.hpp"
#include "vecadvect/io.hpp"
#include "vecadvect/report.hpp"

using namespace vecadvect;
namespace fs = std::filesystem;

namespace {

constexpr double kTau = 2.0 * Grid::kPi;

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "vecadvect-cli-tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args) {
  static int counter = 0;
  const char* bin = std::getenv("VECADVECT_CLI");
  REQUIRE(bin != nullptr);
  const fs::path outp = scratch() / ("stdout" + std::to_string(counter));
  const fs::path errp = scratch() / ("stderr" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(bin) + " " + args + " >" +
                          outp.string() + " 2>" + errp.string();
  const int rc = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(outp);
  r.err = slurp(errp);
  return r;
}

void write_config(const fs::path& p, const Json& j) { write_json_file(p.string(), j); }

Json duality_config() {
  Json j;
  j["kind"] = "duality";
  j["grid"] = {{"sizes", {16, 16}}};
  j["nu"] = 0.1;
  j["T"] = 0.1;
  j["dt"] = 0.01;
  j["f0"] = {{"recipe", "random-solenoidal"}, {"seed", 3}};
  j["g0"] = {{"recipe", "random-solenoidal"}, {"seed", 4}};
  return j;
}

Json so3_config(std::uint64_t seed) {
  Json j;
  j["kind"] = "so3-check";
  j["seed"] = seed;
  j["exp_trials"] = 10;
  j["bch_pairs"] = 50;
  j["correction_fields"] = 2;
  j["correction_points"] = 3;
  return j;
}

}  // namespace

TEST_CASE("convert round trip preserves bytes") {
  const Grid g = Grid::make2d(12, 12, kTau, kTau);
  const VectorField f = taylor_green_2d(0.1)->sample(g, 0.0);
  const fs::path a = scratch() / "rt_a.vaf1";
  const fs::path b = scratch() / "rt_b.vaf1";
  write_vaf1(a.string(), f);
  const CmdResult r = run_cli("convert " + a.string() + " " + b.string());
  CHECK(r.code == 0);
  const std::string ba = slurp(a), bb = slurp(b);
  CHECK(ba.size() > 0);
  CHECK(ba == bb);
}

TEST_CASE("inspect reports shape and a solenoidal field") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const VectorField f = taylor_green_2d(0.2)->sample(g, 0.0);
  const fs::path p = scratch() / "inspect.vaf1";
  write_vaf1(p.string(), f);
  const CmdResult r = run_cli("inspect " + p.string());
  CHECK(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("dim").get<int>() == 2);
  CHECK(j.at("sizes")[0].get<int>() == 16);
  CHECK(j.at("n_components").get<int>() == 2);
  CHECK(j.at("relative_divergence").get<double>() <= 1e-12);
  CHECK(j.at("components").size() == 2);
}

TEST_CASE("inspect rejects a truncated container") {
  const Grid g = Grid::make2d(8, 8, kTau, kTau);
  const VectorField f = taylor_green_2d(0.2)->sample(g, 0.0);
  const fs::path p = scratch() / "trunc.vaf1";
  write_vaf1(p.string(), f);
  const std::string whole = slurp(p);
  std::ofstream cut(p, std::ios::binary | std::ios::trunc);
  cut.write(whole.data(), std::streamsize(whole.size() / 2));
  cut.close();
  const CmdResult r = run_cli("inspect " + p.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("vaf1") != std::string::npos);
}

TEST_CASE("unknown config key is rejected by name") {
  Json j = duality_config();
  j["tolerrance"] = 1e-5;
  const fs::path cfg = scratch() / "unknown_key.json";
  write_config(cfg, j);
  const fs::path out = scratch() / "unknown_key_out";
  const CmdResult r =
      run_cli("run --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("tolerrance") != std::string::npos);
}

TEST_CASE("missing required field is named") {
  Json j;
  j["kind"] = "martingale";
  j["grid"] = {{"sizes", {16, 16}}};
  j["nu"] = 0.1;
  j["T"] = 0.05;
  j["dt"] = 0.005;
  j["n_paths"] = 100;
  j["f0"] = {{"recipe", "random-solenoidal"}, {"seed", 3}};
  j["contour"] = {{"radius", 1.0}};
  const fs::path cfg = scratch() / "missing_seed.json";
  write_config(cfg, j);
  const fs::path out = scratch() / "missing_seed_out";
  const CmdResult r =
      run_cli("run --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("seed") != std::string::npos);
}

TEST_CASE("malformed JSON config is a config error") {
  const fs::path cfg = scratch() / "broken.json";
  std::ofstream(cfg) << "{ \"kind\": ";
  const CmdResult r = run_cli("run --config " + cfg.string());
  CHECK(r.code == 2);
}

TEST_CASE("rerun with the same seed reproduces result.json exactly") {
  const fs::path cfg = scratch() / "so3.json";
  write_config(cfg, so3_config(5));
  const fs::path out1 = scratch() / "so3_run1";
  const fs::path out2 = scratch() / "so3_run2";
  CHECK(run_cli("run --config " + cfg.string() + " --out " + out1.string())
            .code == 0);
  CHECK(run_cli("run --config " + cfg.string() + " --out " + out2.string())
            .code == 0);
  CHECK(slurp(out1 / "result.json") == slurp(out2 / "result.json"));

  Json m1 = load_json_file((out1 / "manifest.json").string());
  Json m2 = load_json_file((out2 / "manifest.json").string());
  CHECK(m1.contains("wall_time_seconds"));
  m1.erase("wall_time_seconds");
  m2.erase("wall_time_seconds");
  m1.erase("out");
  m2.erase("out");
  if (m1.contains("config")) m1["config"].erase("out");
  if (m2.contains("config")) m2["config"].erase("out");
  CHECK(m1 == m2);

  const fs::path out3 = scratch() / "so3_run3";
  CHECK(run_cli("run --config " + cfg.string() + " --seed 6 --out " +
                out3.string())
            .code == 0);
  CHECK(slurp(out1 / "result.json") != slurp(out3 / "result.json"));
}

TEST_CASE("duality run emits plots with CSV siblings") {
  const fs::path cfg = scratch() / "duality.json";
  write_config(cfg, duality_config());
  const fs::path out = scratch() / "duality_out";
  const CmdResult r =
      run_cli("run --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "result.json"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "pairing.svg"));
  CHECK(fs::exists(out / "pairing.csv"));
  const Json res = load_json_file((out / "result.json").string());
  CHECK(res.at("deviation").get<double>() <= 1e-5);
  CHECK(res.at("pass").get<bool>());
}

TEST_CASE("output directory falls back to the environment") {
  const fs::path cfg = scratch() / "so3_env.json";
  write_config(cfg, so3_config(9));
  const fs::path out = scratch() / "env_out";
  const char* bin = std::getenv("VECADVECT_CLI");
  REQUIRE(bin != nullptr);
  const std::string cmd = "VECADVECT_OUT=" + out.string() + " " + bin +
                          " run --config " + cfg.string() + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(fs::exists(out / "result.json"));
}
