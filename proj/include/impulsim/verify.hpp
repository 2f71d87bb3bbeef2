#pragma once

#include <string>
#include <vector>

#include "impulsim/scenario.hpp"

namespace impulsim {

struct CriterionResult {
  int number = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // measured numbers
  double seconds = 0.0;
};

struct VerifyOptions {
  unsigned seed = 42;
};

/// Runs the full acceptance suite (built-in scenarios only) and returns one
/// result per criterion. Nothing throws for a failed criterion; exceptions
/// are converted into failed results with the message as detail.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& options = {});

/// Prints "[PASS]/[FAIL] <n> <name>: <detail> (<seconds>s)" per criterion
/// plus a total line; returns the number of failures.
int print_acceptance(std::ostream& out, const std::vector<CriterionResult>& results,
                     double total_seconds);

}  // namespace impulsim
