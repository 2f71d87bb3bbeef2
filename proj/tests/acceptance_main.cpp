// Dedicated acceptance binary: one pass/fail line per criterion, nonzero exit
// when any criterion fails.
#include <chrono>
#include <iostream>

#include "impulsim/verify.hpp"

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = impulsim::run_acceptance({});
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const int failures = impulsim::print_acceptance(std::cout, results, total);
  return failures == 0 ? 0 : 1;
}
