#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "plab/channels.hpp"
#include "plab/network.hpp"

namespace plab {

enum class AttackKind { fgsm, pgd, cw_l2, boundary, contrast, pixel, translate };

const char* to_string(AttackKind kind);

/// Attack family plus hyperparameters.
///
/// Descriptor strings: `pgd:eps=0.031,steps=40`, `cw:c=0.01,steps=100,bs=5,kappa=0`,
/// `boundary:iters=2000`, `contrast`, `pixel:steps=50`, `translate:eps=3`,
/// optionally followed by `+eot=<k>` and `+channel=<channel descriptor>`.
struct AttackConfig {
  AttackKind kind = AttackKind::pgd;
  double eps = 0.3;          // L-inf budget (pgd/fgsm); max shift in pixels (translate)
  std::size_t steps = 40;    // iterations; boundary walk length; pixel budget; contrast grid size
  double step_size = 0.01;
  bool random_start = true;
  double c_init = 0.01;
  std::size_t binary_steps = 5;  // 0 keeps c fixed at c_init
  double lr = 0.005;
  double kappa = 0.0;
  std::size_t eot_samples = 1;
  std::optional<Channel> channel_in_loop;
  std::size_t vote_count = 11;   // majority votes deciding success on randomized targets
  std::size_t init_trials = 100;
  double spherical_step = 0.01;
  double source_step = 0.01;
  double contrast_target = 0.5;  // (max + min) / 2 over the dataset

  /// Defaults for a family; pgd and cw get the usual published settings.
  static AttackConfig defaults(AttackKind kind);
  static AttackConfig parse(const std::string& descriptor);
  std::string descriptor() const;
  void validate() const;
};

struct AttackResult {
  Tensor x_adv;
  bool success = false;
  double delta_adv = 0.0;  // ||x - x_adv||_2
  double linf = 0.0;
  std::size_t queries = 0;  // forward plus backward passes
};

/// Whether attacking `m` under `noise` and the optional channel needs votes.
bool randomized_target(const NoiseConfig& noise, const std::optional<Channel>& channel);

/// Label assigned to x by the attacked system: one deterministic pass, or a
/// majority over `votes` stochastic passes (ties to the lowest class).
std::size_t target_prediction(const Model& m, const Tensor& x, const NoiseConfig& noise,
                              const std::optional<Channel>& channel, std::size_t votes, Rng& rng,
                              std::size_t* queries = nullptr);

/// d(loss)/d(logits) for a per-sample objective on the logits.
using LogitObjective = std::function<double(const Tensor& logits, Tensor& grad_logits)>;

struct AveragedGradient {
  double value = 0.0;
  Tensor grad_x;
  Tensor logits;  // mean logits over the samples
};

/// Mean objective value and input gradient over `samples` stochastic passes,
/// each routed through the channel with channel_backward.
AveragedGradient averaged_gradient(const Model& m, const Tensor& x, const NoiseConfig& noise,
                                   const std::optional<Channel>& channel, std::size_t samples, Rng& rng,
                                   const LogitObjective& objective);

/// Expectation-over-transformation estimate of the cross-entropy input gradient.
Tensor eot_grad(const Model& m, const Tensor& x, std::size_t label, const NoiseConfig& noise, Rng& rng,
                std::size_t samples, const std::optional<Channel>& channel = std::nullopt);

/// Sign-gradient ascent with L-inf projection and [0, 1] clipping (FGSM is
/// the one-step, no-restart special case).
AttackResult pgd(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                 const NoiseConfig& noise, Rng& rng);

/// Carlini-Wagner L2 with tanh reparameterization, Adam, and a binary search
/// over c. Returns the lowest-distortion success, or x with success=false.
AttackResult cw_l2(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                   const NoiseConfig& noise, Rng& rng);

/// Decision-based boundary attack (random walk along the decision boundary).
AttackResult boundary_attack(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                             const NoiseConfig& noise, Rng& rng);

/// (1 - eps) * x + eps * target.
Tensor contrast_reduce(const Tensor& x, double eps, double target);

/// Integer shift of every channel by (dy, dx) with zero fill.
Tensor translate_image(const Tensor& x, int dy, int dx);

/// Contrast reduction, multi-pixel, or spatial translation.
AttackResult simple_blackbox(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                             const NoiseConfig& noise, Rng& rng);

/// Dispatches on cfg.kind.
AttackResult run_attack(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                        const NoiseConfig& noise, Rng& rng);

}  // namespace plab
