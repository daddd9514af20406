#pragma once

#include <map>
#include <string>
#include <vector>

#include "plab/analysis.hpp"
#include "plab/dataset.hpp"
#include "plab/defenses.hpp"

namespace plab {

/// Flat `section.key -> value` view of an INI-style file:
///
///     [section]
///     key = value   # comments start with '#' or ';' at line start
///
/// Keys outside any section live in the `experiment` section.
using ConfigValues = std::map<std::string, std::string>;

ConfigValues parse_config_text(const std::string& text, const std::string& origin = "<config>");
ConfigValues read_config_file(const std::string& path);

/// Applies `key=value` overrides (keys may omit the `experiment.` prefix).
void apply_overrides(ConfigValues& values, const std::vector<std::string>& overrides);

const std::vector<std::string>& experiment_kinds();

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 42;
  std::string out_dir = "plab_out";

  // [data]
  std::string data_source = "synthetic";  // or a path to a binary batch file
  SyntheticConfig synthetic;
  std::size_t binary_classes = 10;
  std::size_t examples = 100;  // test examples used by attack and analysis runs

  // [model]
  std::string arch = "smallconv";
  std::string checkpoint;  // load instead of training when set

  // [train] and [noise]
  TrainConfig train;
  bool adversarial_training = false;
  AdvTrainConfig adv;

  // [attack] / [defense]
  std::string attack = "pgd:eps=0.0313725,steps=40,step=0.00784314";
  DefenseConfig defense;

  // [sweep]
  std::vector<std::string> sweep_families{"fc", "cd", "svd", "gauss", "uniform", "laplace"};
  std::map<std::string, std::vector<double>> sweep_strengths;
  std::size_t sweep_trials = 1;  // draws per example for stochastic channels

  // [transfer]
  std::vector<std::string> transfer_rows;  // channel descriptors, "empty" for clean images
  std::vector<std::string> transfer_cols;  // defense descriptors

  // [recovery]
  std::vector<double> recovery_sigmas;
  std::size_t recovery_trials = 100;
  std::size_t recovery_example = 0;

  // [instability]
  HessianConfig hessian;

  /// Every recognised key with its resolved value, as echoed to manifests.
  ConfigValues resolved;

  /// Throws ConfigError naming the offending key.
  static ExperimentConfig from_values(const ConfigValues& values);
};

/// Default strength grid for a channel family.
std::vector<double> default_strengths(const std::string& family);

/// Loads or generates the dataset named by the config.
Dataset load_dataset(const ExperimentConfig& cfg);

/// Loads cfg.checkpoint, or trains a fresh model on the train split.
Model obtain_model(const ExperimentConfig& cfg, const Dataset& data);

std::string format_double(double v);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
void write_transfer_csv(const std::string& path, const TransferMatrix& tm);
void write_recovery_csv(const std::string& path, const RecoveryCurve& curve);
void write_instability_csv(const std::string& path, const std::vector<InstabilityRow>& rows);

struct RunResult {
  int exit_code = 0;  // 0 success, 1 runtime failure, 2 usage or configuration error
  std::string message;
  std::vector<std::string> files;
};

/// Runs one experiment and writes its artifacts plus `manifest.txt` into
/// cfg.out_dir. Files written by a failed run are removed.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Parses values (reporting errors as exit code 2) and runs.
RunResult run_experiment(const ConfigValues& values);

}  // namespace plab
