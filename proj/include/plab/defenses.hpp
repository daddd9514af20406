#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "plab/channels.hpp"
#include "plab/network.hpp"

namespace plab {

/// An input channel, in-network noise, and a majority vote over `trials`
/// stochastic predictions.
///
/// Descriptor: `channel:<desc>;noise:<dist>,<σ_init>,<σ_inner>,<σ_param>;trials:<n>`,
/// every part optional.
struct DefenseConfig {
  std::optional<Channel> channel;
  NoiseConfig noise;
  std::size_t trials = 1;

  bool randomized() const;
  void validate() const;
  std::string descriptor() const;
  static DefenseConfig parse(const std::string& descriptor);
};

struct Prediction {
  std::size_t label = 0;
  std::vector<std::size_t> histogram;  // votes per class, sums to trials
};

/// Modal label over d.trials passes of channel-then-forward; ties go to the
/// lowest class index. Trial t draws from rng.derive(t).
Prediction defend_predict(const Model& m, const DefenseConfig& d, const Tensor& x, const Rng& rng);

/// Percentage of examples whose defended prediction equals the label.
/// Example i uses rng.derive(i); the result does not depend on worker count.
double evaluate_defense(const Model& m, const DefenseConfig& d, const std::vector<Tensor>& xs,
                        const std::vector<int>& labels, const Rng& rng);
double evaluate_defense(const Model& m, const DefenseConfig& d, const Dataset& data, const Rng& rng);

struct AdvTrainConfig {
  std::size_t pgd_steps = 7;
  double eps = 8.0 / 255.0;
  double step_size = 2.55 / 255.0;
  double clean_weight = 0.5;
  double adv_weight = 0.5;
  bool random_start = true;

  void validate() const;
};

/// Observer of (clean, adversarial) pairs produced during adversarial training.
using AdvExampleObserver = std::function<void(const Tensor& x, const Tensor& x_adv)>;

/// clean_weight * L(x) + adv_weight * L(pgd(x)) with the inner PGD run
/// against the current model under `noise` (single draw per step).
SampleObjective adversarial_objective(const AdvTrainConfig& atc, const NoiseConfig& noise,
                                      AdvExampleObserver observer = {});

/// Adversarial training; cfg.warmup ramps eps, step size and noise together.
TrainResult train_adversarial(Model m, const Dataset& data, const AdvTrainConfig& atc, const TrainConfig& cfg);

}  // namespace plab
