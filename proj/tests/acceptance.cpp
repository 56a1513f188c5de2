#include <iostream>
#include <string>

#include "bvc/acceptance.hpp"

int main(int argc, char** argv) {
  bvc::AcceptanceOptions opt;
  opt.timings = true;
  if (argc > 1) opt.bvcorr_path = argv[1];
  bool ok = true;
  for (const auto& r : bvc::run_acceptance(opt, std::cout)) ok = ok && r.pass;
  return ok ? 0 : 1;
}
