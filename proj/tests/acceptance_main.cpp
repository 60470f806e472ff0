#include <cstdio>

#include "vecadvect/acceptance.hpp"

int main() {
  const auto results = vecadvect::run_acceptance_suite(1);
  int failed = 0;
  double total = 0.0;
  for (const auto& r : results) {
    if (!r.pass) ++failed;
    total += r.seconds;
  }
  std::printf("%zu criteria, %d failed, %.1f s total\n", results.size(),
              failed, total);
  return failed == 0 ? 0 : 1;
}
