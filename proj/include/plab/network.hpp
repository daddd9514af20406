#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plab/dataset.hpp"
#include "plab/rng.hpp"
#include "plab/tensor.hpp"

namespace plab {

enum class LayerKind { conv, relu, maxpool2, dense, flatten };
enum class NoiseSite { none, pre_activation };

const char* to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t units = 0;   // conv filters or dense outputs
  std::size_t kernel = 0;  // conv kernel side (odd)
  std::size_t pad = 0;
  // Noise is added to the layer's input tensor ("in front of" the layer).
  NoiseSite noise_site = NoiseSite::none;
};

struct Param {
  std::string name;
  Tensor value;
};

/// An ordered layer list plus its parameters.
///
/// Parameters hold values representable as 32-bit floats, which is what
/// checkpoints store, so save/load is bit-exact.
struct Model {
  std::string arch_id;
  Shape input_shape;
  std::size_t num_classes = 0;
  std::vector<LayerSpec> layers;
  std::vector<Param> params;
  std::uint32_t epochs_trained = 0;
  std::uint64_t seed = 0;

  std::size_t param_count() const;
  const Tensor& param(const std::string& name) const;
  Tensor& param(const std::string& name);
};

/// Known architecture ids: "smallconv", "mlp", "linear".
const std::vector<std::string>& known_architectures();

/// Layer list for `arch_id`; the shape of every layer follows from
/// `input_shape` and `num_classes`.
std::vector<LayerSpec> architecture(const std::string& arch_id, const Shape& input_shape,
                                    std::size_t num_classes);

/// He-uniform weights (bound sqrt(6 / fan_in)) and zero biases from `seed`.
Model build_model(const std::string& arch_id, const Shape& input_shape, std::size_t num_classes,
                  std::uint64_t seed);

/// Feature and parameter noise for RobustNet / ParamNet style models.
///
/// Scales are standard deviations; uniform and Laplace draws are
/// variance-matched (see Distribution::with_stddev).
struct NoiseConfig {
  NoiseKind dist = NoiseKind::gauss;
  double sigma_init = 0.0;   // first noise site
  double sigma_inner = 0.0;  // every later site
  double sigma_param = 0.0;  // additive parameter noise
  bool apply_in_training = false;

  bool feature_noise() const { return sigma_init > 0.0 || sigma_inner > 0.0; }
  bool param_noise() const { return sigma_param > 0.0; }
  bool any() const { return feature_noise() || param_noise(); }
  /// Every scale multiplied by f.
  NoiseConfig scaled(double f) const;
  /// Throws ParameterError for negative scales or mixed feature/param noise.
  void validate() const;
};

enum class Mode { train, eval };

/// Activations recorded during a forward pass, consumed by `backward`.
struct ForwardTrace {
  std::vector<Tensor> layer_inputs;  // input of each layer after noise injection
  std::vector<Tensor> noisy_params;  // realized θ+ε when parameter noise is on
  Tensor logits;
};

ForwardTrace forward_trace(const Model& m, const Tensor& x, const NoiseConfig& noise, Rng& rng,
                           Mode mode = Mode::eval);

Tensor forward(const Model& m, const Tensor& x, const NoiseConfig& noise, Rng& rng, Mode mode = Mode::eval);

/// Noise-free logits.
Tensor forward(const Model& m, const Tensor& x);

struct Backprop {
  Tensor grad_x;
  std::vector<Tensor> grad_params;  // aligned with Model::params; empty unless requested
};

/// Reverse-mode pass from d(loss)/d(logits) through the recorded trace.
Backprop backward(const Model& m, const ForwardTrace& trace, const Tensor& grad_logits, bool param_grads);

struct CrossEntropy {
  double loss = 0.0;
  Tensor grad_logits;  // softmax(z) - onehot(label)
};

CrossEntropy cross_entropy(const Tensor& logits, std::size_t label);

struct LossAndGrads {
  double loss = 0.0;
  Tensor logits;
  Tensor grad_x;
  std::vector<Tensor> grad_params;
};

/// Softmax cross-entropy and its exact gradients for one noise draw.
LossAndGrads loss_and_grads(const Model& m, const Tensor& x, std::size_t label, const NoiseConfig& noise,
                            Rng& rng, Mode mode = Mode::eval, bool param_grads = true);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 32;
  double lr = 0.05;
  double momentum = 0.9;
  NoiseConfig noise;
  std::uint64_t seed = 42;
  /// Epochs over which noise scales (and adversarial budgets) ramp linearly
  /// up to their targets; 0 disables. See warmup_factor.
  std::size_t warmup = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // percent, from the training forward passes
};

struct SampleOutcome {
  double loss = 0.0;
  bool correct = false;
  std::vector<Tensor> grads;
};

/// Per-example training objective: loss, correctness and parameter gradients.
using SampleObjective =
    std::function<SampleOutcome(const Model& m, const Tensor& x, int label, Rng& rng)>;

/// Plain cross-entropy under `noise` in training mode.
SampleObjective clean_objective(const NoiseConfig& noise);

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
};

/// Objective used for a given (0-based) epoch.
using ObjectiveSchedule = std::function<SampleObjective(std::size_t epoch)>;

/// min(1, (epoch + 1) / cfg.warmup), or 1 without warmup.
double warmup_factor(const TrainConfig& cfg, std::size_t epoch);

/// Mini-batch SGD with momentum (v = mu*v + g; θ -= lr*v), batch-mean
/// gradients. Per-example randomness comes from streams derived from
/// (seed, epoch, position), so the result is independent of worker count.
/// A supplied objective is used as is; otherwise cross-entropy under the
/// warmup-scaled cfg.noise.
TrainResult train(Model m, const Dataset& data, const TrainConfig& cfg, const SampleObjective& objective = {});
TrainResult train_scheduled(Model m, const Dataset& data, const TrainConfig& cfg, const ObjectiveSchedule& schedule);

/// Percentage of `data` whose noise-free prediction equals the label.
double accuracy(const Model& m, const Dataset& data);

/// Standard deviation over all parameter entries.
double param_stddev(const Model& m);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace plab
