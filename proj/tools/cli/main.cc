#include <iostream>

#include "cli.h"

#ifdef STEEL_BROKEN_BACKWARD
#include "steel/numerics/value.h"
#endif

int main(int argc, char** argv) {
#ifdef STEEL_BROKEN_BACKWARD
  // Fixture build: one backward rule is disabled to prove gradcheck notices.
  steel::testing::SetBrokenBackward(STEEL_BROKEN_BACKWARD);
#endif
  return steel::cli::RunCli({argv, argv + argc}, std::cout, std::cerr);
}
