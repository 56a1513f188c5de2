#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bvc {

struct CriterionResult {
  int id = 0;
  bool pass = false;
  std::string summary;
  double seconds = 0;
};

struct AcceptanceOptions {
  // Append wall-clock time to each line and enforce runtime budgets.
  bool timings = false;
  // Criterion 10: when set, run `<bvcorr> selftest` twice and compare the
  // output; otherwise repeat criteria 1-9 in-process and compare.
  std::string bvcorr_path;
};

// Runs criteria 1-10, printing one line per criterion.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& out);

}  // namespace bvc
