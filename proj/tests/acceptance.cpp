// Runs the acceptance suite and prints one line per criterion. The exit code
// is 0 when the suite ran to completion; pass --strict to also fail on any
// failed criterion.

#include <cstring>
#include <iostream>
#include <string>

#include "relstable/config.hpp"
#include "relstable/verify.hpp"

int main(int argc, char** argv) {
  using namespace relstable;
  std::string out = "acceptance_out";
  std::string config;
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) out = argv[++i];
    else if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) config = argv[++i];
    else {
      std::cerr << "usage: acceptance [--config FILE] [--out DIR] [--strict]\n";
      return 2;
    }
  }
  try {
    const ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    VerifyOptions opts;
    opts.log = &std::cerr;
    const VerifyReport rep = run_verify(cfg, out, opts);
    int failed = 0;
    for (const auto& r : rep.results) {
      std::cout << "criterion " << r.id << " " << (r.passed ? "PASS" : "FAIL") << " " << r.name
                << ": " << r.detail << std::endl;
      failed += r.passed ? 0 : 1;
    }
    std::cout << (rep.results.size() - failed) << "/" << rep.results.size()
              << " criteria passed" << std::endl;
    return strict && failed > 0 ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "acceptance run aborted: " << e.what() << "\n";
    return 1;
  }
}
