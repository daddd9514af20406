#pragma once

#include <span>
#include <string>

#include "plab/rng.hpp"
#include "plab/tensor.hpp"

namespace plab {

/// An input perturbation x -> x' with x, x' in [0, 1].
///
/// Descriptor strings: `fc:0.5`, `cd:4`, `svd:0.5`, `gauss:0.03`,
/// `uniform:0.04`, `laplace:0.03`, `empty`. Noise strengths are standard
/// deviations (variance-matched across the three distributions).
struct Channel {
  enum class Kind { empty, fc, cd, svd, noise };

  Kind kind = Kind::empty;
  double strength = 0.0;  // kept fraction, bits, kept-rank fraction, or sigma
  NoiseKind noise = NoiseKind::gauss;

  static Channel identity() { return {}; }
  static Channel fc(double keep_fraction) { return {Kind::fc, keep_fraction, NoiseKind::gauss}; }
  static Channel cd(int bits) { return {Kind::cd, static_cast<double>(bits), NoiseKind::gauss}; }
  static Channel svd(double rank_fraction) { return {Kind::svd, rank_fraction, NoiseKind::gauss}; }
  static Channel additive(NoiseKind kind, double sigma) { return {Kind::noise, sigma, kind}; }

  bool stochastic() const { return kind == Kind::noise && strength > 0.0; }
  /// Same family with a different strength parameter.
  Channel with_strength(double s) const { return {kind, s, noise}; }
  /// Family name as used in descriptors and CSV output (fc, cd, svd, gauss, ...).
  std::string family() const;
  std::string descriptor() const;
  void validate() const;

  static Channel parse(const std::string& descriptor);
  bool operator==(const Channel&) const = default;
};

/// v -> round((2^b - 1) v) / (2^b - 1), ties away from zero; inputs are
/// clamped to [0, 1] first.
Tensor cd_quantize(const Tensor& x, int bits);

/// Square frequency ring of FFT bin (u, v): max over axes of min(index, n - index).
std::size_t frequency_ring(std::size_t u, std::size_t v, std::size_t height, std::size_t width);

/// Per-channel low-pass in the 2-D FFT domain keeping rings <= f * max_ring;
/// real part of the inverse, clamped to [0, 1]. Works on [C, H, W] or [H, W].
Tensor fc_filter(const Tensor& x, double keep_fraction);

/// Same masking without the final clamp (the underlying linear map).
Tensor fc_filter_linear(const Tensor& x, double keep_fraction);

/// Per-channel truncated SVD keeping ceil(r * min(H, W)) values, clamped to [0, 1].
Tensor svd_reduce(const Tensor& x, double rank_fraction);

Tensor apply_channel(const Channel& c, const Tensor& x, Rng& rng);

/// Backward pass through a channel: exact for noise and fc (including the
/// clamp), identity (BPDA) for cd and svd.
Tensor channel_backward(const Channel& c, const Tensor& x, const Tensor& upstream);

/// Mean of ||C(x) - x||_2 over `xs` (and over `trials` draws for stochastic
/// channels; deterministic channels are evaluated once per image). Image i,
/// trial t uses stream rng.derive(i, t).
double channel_distortion(const Channel& c, std::span<const Tensor> xs, const Rng& rng, std::size_t trials = 1);

}  // namespace plab
