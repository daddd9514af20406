// Acceptance runner: one PASS/FAIL line per criterion.
#include <chrono>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "criteria.hpp"
#include "plab/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale acceptance criteria"};
  std::string cache = PLAB_ACCEPTANCE_CACHE;
  std::vector<int> only;
  bool warm = false;
  app.add_option("--cache", cache, "trained-model cache directory");
  app.add_option("--only", only, "run only these criterion numbers");
  app.add_flag("--warm", warm, "train every cached model and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    const acceptance::Zoo zoo(cache);
    if (warm) {
      for (const auto& r : acceptance::all_recipes(zoo)) zoo.model(r);
      std::cout << "model cache ready in " << cache << "\n";
      return 0;
    }
    const std::set<int> wanted(only.begin(), only.end());
    int failures = 0;
    for (const auto& c : acceptance::criteria()) {
      if (!wanted.empty() && !wanted.count(c.id)) continue;
      const auto start = std::chrono::steady_clock::now();
      std::vector<acceptance::Clause> clauses;
      try {
        clauses = c.run(zoo);
      } catch (const std::exception& e) {
        clauses = {{std::string("error: ") + e.what(), false}};
      }
      bool pass = !clauses.empty();
      std::string detail;
      for (const auto& cl : clauses) {
        pass = pass && cl.pass;
        detail += (detail.empty() ? "" : "; ") + cl.text + (cl.pass ? "" : " [x]");
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << (pass ? "PASS" : "FAIL") << "  C" << c.id << " " << c.title << ": " << detail << " ("
                << static_cast<int>(secs) << " s)" << std::endl;
      failures += pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }
}
