// Prints one PASS/FAIL line per acceptance criterion; exit status 0 iff all pass.

#include "spingeom/acceptance.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : spingeom::acceptance::criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto r = spingeom::run_criterion(c.id);
    std::printf("%s [%.2f s]\n", spingeom::format_line(r).c_str(), r.seconds);
    std::fflush(stdout);
    failed += !r.pass;
  }
  return failed == 0 ? 0 : 1;
}
