#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "vecadvect/acceptance.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/experiments.hpp"
#include "vecadvect/io.hpp"
#include "vecadvect/report.hpp"
#include "vecadvect/version.hpp"

namespace va = vecadvect;

namespace {

std::string resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("VECADVECT_OUT"))
    if (*env) return env;
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic vector-field transport toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("vecadvect ") + va::kVersion);

  std::string config_path, out_dir, inspect_path, in_path, out_path;
  std::uint64_t seed = 0;
  int threads = 0;

  auto* run =
      app.add_subcommand("run", "run an experiment described by a JSON config");
  run->add_option("--config", config_path, "experiment config file")
      ->required();
  auto* seed_opt =
      run->add_option("--seed", seed, "override the seed in the config");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads");

  auto* inspect =
      app.add_subcommand("inspect", "summarize a stored field container");
  inspect->add_option("file", inspect_path, "field container path")
      ->required();

  auto* convert =
      app.add_subcommand("convert", "re-encode a field container");
  convert->add_option("input", in_path, "source container")->required();
  convert->add_option("output", out_path, "destination container")->required();

  auto* suite = app.add_subcommand("suite", "run the acceptance battery");
  suite->add_option("--out", out_dir, "directory for the summary table");
  suite->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      va::RunOverrides ov;
      ov.has_seed = seed_opt->count() > 0;
      ov.seed = seed;
      ov.out_dir = out_dir;
      ov.threads = threads;
      return va::run_experiment(config_path, ov);
    }
    if (*inspect) {
      const va::VectorField f = va::read_vaf1(inspect_path);
      std::printf("%s\n", va::field_summary(f).dump(2).c_str());
      return 0;
    }
    if (*convert) {
      va::write_vaf1(out_path, va::read_vaf1(in_path));
      return 0;
    }
    if (*suite) {
      const auto results =
          va::run_acceptance_suite(threads > 0 ? threads : 1);
      const std::string out = resolve_out(out_dir);
      std::filesystem::create_directories(out);
      va::write_suite_summary(out + "/acceptance_summary.csv", results);
      for (const auto& r : results)
        if (!r.pass) return 4;
      return 0;
    }
  } catch (const va::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const va::NumericalGuard& e) {
    std::fprintf(stderr, "numerical guard: %s\n", e.what());
    return 3;
  }
  return 0;
}
