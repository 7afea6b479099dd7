// One line per criterion, nonzero exit on any failure.
#include <iostream>
#include <string>
#include <vector>

#include "bcdlab/verify/acceptance.hpp"

int main(int argc, char** argv) {
  bcdlab::verify::AcceptanceOptions options;
  options.data_dir = bcdlab::verify::default_data_dir();
  std::vector<std::string> only(argv + 1, argv + argc);
  const auto results = bcdlab::verify::run_acceptance(options, only);
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::cout << bcdlab::verify::format_result(r) << "\n";
    failed += !r.passed;
  }
  std::cout << (results.size() - failed) << "/" << results.size() << " acceptance criteria passed\n";
  return failed == 0 && !results.empty() ? 0 : 1;
}
