// plab command-line runner.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale adversarial robustness experiments"};
  std::string kind;
  std::string config;
  std::string seed;
  std::string out;
  std::vector<std::string> overrides;

  std::string kinds;
  for (const auto& k : plab::experiment_kinds()) kinds += (kinds.empty() ? "" : "|") + k;
  app.add_option("kind", kind, "experiment kind: " + kinds)->required();
  app.add_option("overrides", overrides, "section.key=value overrides");
  app.add_option("--config", config, "INI-style experiment config");
  app.add_option("--seed", seed, "run seed (overrides experiment.seed)");
  app.add_option("--out", out, "output directory (overrides experiment.out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  plab::ConfigValues values;
  try {
    if (!config.empty()) values = plab::read_config_file(config);
    values["experiment.kind"] = kind;
    if (!seed.empty()) values["experiment.seed"] = seed;
    if (!out.empty()) values["experiment.out"] = out;
    plab::apply_overrides(values, overrides);
  } catch (const plab::Error& e) {
    std::cerr << "plab: " << e.what() << "\n";
    return 2;
  }

  const plab::RunResult r = plab::run_experiment(values);
  if (r.exit_code != 0) {
    std::cerr << "plab: " << r.message << "\n";
  } else {
    std::cout << r.message << "\n";
    for (const auto& f : r.files) std::cout << "  " << f << "\n";
  }
  return r.exit_code;
}
