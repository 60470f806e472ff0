#pragma once

#include <cstdint>
#include <string>

namespace vecadvect {

// Command-line overrides applied on top of the parsed config file.
struct RunOverrides {
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string out_dir;  // wins over the config "out" and VECADVECT_OUT
  int threads = 0;      // 0 keeps the config value
};

// Parses, validates and executes one experiment config, writing
// manifest.json, result.json and the kind-specific artifacts under the
// resolved output directory. Returns 0 on success and 4 when the configured
// acceptance checks fail; ConfigError and NumericalGuard propagate to the
// caller. Unknown config keys and missing required fields are ConfigErrors
// naming the offending field. result.json is deterministic for a fixed
// config and seed; the wall time lives only in manifest.json.
int run_experiment(const std::string& config_path, const RunOverrides& ov);

}  // namespace vecadvect
