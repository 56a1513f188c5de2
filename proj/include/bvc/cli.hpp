#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "bvc/graded_core.hpp"
#include "bvc/poly_bv.hpp"

namespace bvc {

// Parsed job file.  See README for the schema.
struct JobSpec {
  int n_vars = 1;
  XPoly potential;
  int n_max = 4;
  int n_hbar = 6;
  int n_t = 4;
  std::vector<Rational> iota;  // empty: coefficient of the unit
  std::vector<std::string> outputs;
  std::string fault_injection;

  bool wants(const std::string& what) const;
};

// Throws InputError on malformed or unknown fields.
JobSpec parse_job(const std::string& json_text);

// Rational from "p/q", "p" or an integer literal.
Rational parse_rational(const std::string& s);

enum ExitCode { kExitOk = 0, kExitInput = 2, kExitIdentity = 3, kExitResource = 4 };

// Entry point of `bvcorr`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bvc
