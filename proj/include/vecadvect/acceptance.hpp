#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vecadvect {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // the measured numbers against their bounds
  double seconds = 0.0;
};

// Runs the full acceptance battery in order. Monte Carlo criteria honor the
// thread cap; everything is seeded, so reruns reproduce the same numbers.
// Guard exceptions inside one criterion mark it failed and do not stop the
// remaining ones.
std::vector<CriterionResult> run_acceptance_suite(int threads);

// One line per criterion, "PASS"/"FAIL" first, written as emitted.
void print_criterion(const CriterionResult& r);

// Summary table: index, name, pass, seconds, detail.
void write_suite_summary(const std::string& csv_path,
                         const std::vector<CriterionResult>& results);

// Rotation-group toolkit battery, shared between the acceptance suite and
// the so3-check experiment kind. All comparisons run against independent
// oracles: a scaled-and-squared Taylor series for the exponential, a
// quaternion-based matrix log for the composition law, and central finite
// differences of the sampled rotation field for the correction term.
struct So3Battery {
  double exp_gap = 0.0;         // exp vs 20-term series, |a| <= 3
  double bch_gap = 0.0;         // composed axis vs matrix-log oracle
  double correction_gap = 0.0;  // sigma' sigma^T vs finite differences
  double branch_gap = 0.0;      // continuity across the small-angle switch
  bool pass = false;
};
So3Battery run_so3_battery(std::uint64_t seed, int exp_trials, int bch_pairs,
                           int correction_fields, int correction_points);

}  // namespace vecadvect
