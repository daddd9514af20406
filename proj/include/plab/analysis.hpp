#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "plab/attacks.hpp"
#include "plab/channels.hpp"
#include "plab/defenses.hpp"
#include "plab/network.hpp"

namespace plab {

/// First- and second-order instability metrics of one input.
struct InstabilityReport {
  std::vector<double> m1_per_class;  // ||d/dx L(x, c)||_2 per class c
  double m2 = 0.0;                   // top Hessian eigenvalue of L(x, class) in x
  std::size_t min_class = 0;         // argmin of m1_per_class
  std::size_t confident_class = 0;   // argmax of the confidences
  bool anomaly = false;              // min_class != confident_class
};

/// Per-class cross-entropy gradient norms (noise-free model). `confidences`
/// may be empty, in which case softmax(forward(m, x)) is used.
InstabilityReport grad_norms_per_class(const Model& m, const Tensor& x, const Tensor& confidences = {});

struct HessianConfig {
  std::size_t iters = 100;
  double fd_step = 1e-4;
  double tol = 1e-6;
  std::uint64_t seed = 0;  // start vector
};

struct HessianResult {
  double eigenvalue = 0.0;  // Rayleigh quotient of the dominant direction
  std::size_t iterations = 0;
  bool converged = false;
  Tensor vector;  // unit-norm dominant direction
};

using GradientFn = std::function<Tensor(const Tensor&)>;

/// Power iteration on central-difference Hessian-vector products of `grad`
/// around x, with h = fd_step * (1 + ||x||_inf). Finds the eigenvalue of
/// largest magnitude.
HessianResult power_iteration_hvp(const GradientFn& grad, const Tensor& x, const HessianConfig& cfg);

/// M2 for the cross-entropy of class `cls` at x.
double top_hessian_eig(const Model& m, const Tensor& x, std::size_t cls, const HessianConfig& cfg = {});

/// M1 row plus M2 of the original-class loss, as written to instability CSVs.
struct InstabilityRow {
  std::size_t example_id = 0;
  bool adversarial = false;
  double m1_orig = 0.0;
  double m1_adv_class = 0.0;  // m1 at the predicted class
  std::size_t m1_min_class = 0;
  double m2 = 0.0;
  bool anomaly = false;
};

InstabilityRow instability_row(const Model& m, const Tensor& x, std::size_t orig_label, std::size_t example_id,
                               bool adversarial, const HessianConfig& cfg);

/// Percentage of rows flagged as anomalous.
double anomaly_rate(const std::vector<InstabilityRow>& rows);

struct RecoveryCurve {
  std::vector<double> sigmas;
  std::vector<std::size_t> freq_original;
  std::vector<std::size_t> freq_adversarial;
  std::vector<std::size_t> freq_other;
  std::size_t trials = 0;

  /// Some sigma where the original label wins more often than the adversarial one.
  bool has_window() const;
};

/// Classifies clamp(x_adv + gauss(sigma)) `trials` times per sigma.
/// Throws ArgumentError unless the noise-free model misclassifies x_adv.
RecoveryCurve recovery_window(const Model& m, const Tensor& x_orig, const Tensor& x_adv, std::size_t orig_label,
                              std::size_t adv_label, const std::vector<double>& sigmas, std::size_t trials,
                              const Rng& rng);

struct SweepRow {
  std::string family;
  double strength = 0.0;
  double delta_c = 0.0;
  double clean_acc = 0.0;
  double adv_acc = 0.0;
};

/// For each strength of the channel family: set-mean distortion on the clean
/// set and defended accuracy on the adversarial and clean sets. Stochastic
/// channels average both over `trials` independent draws per example.
std::vector<SweepRow> channel_sweep(const Model& m, const Channel& family, const std::vector<double>& strengths,
                                    const std::vector<Tensor>& adv_set, const std::vector<Tensor>& clean_set,
                                    const std::vector<int>& labels, const Rng& rng, std::size_t trials = 1);

/// Index of the first row with the highest adversarial accuracy.
std::size_t sweep_peak(const std::vector<SweepRow>& rows);

/// One attacker assumption. No attack means the clean images ("Empty").
struct TransferRow {
  std::string name;
  std::optional<AttackConfig> attack;
};

struct TransferMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> cells;  // accuracy percent, [row][col]

  double row_mean(std::size_t r) const;
};

/// Adversarial set per row against the undefended model with the row's
/// channel in the loop, then every column defense evaluated on it.
TransferMatrix transfer_matrix(const Model& m, const std::vector<TransferRow>& rows,
                               const std::vector<std::pair<std::string, DefenseConfig>>& cols,
                               const std::vector<Tensor>& xs, const std::vector<int>& labels, const Rng& rng);

/// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace plab
