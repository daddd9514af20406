#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "plab/tensor.hpp"

namespace plab {

/// splitmix64 finalizer; also used to hash stream ids.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t value);

/// xoshiro256** generator seeded through splitmix64.
///
/// The state is derived from `seed ^ mix64(stream_id)`, so identical
/// (seed, stream_id) pairs always yield identical sequences and distinct
/// stream ids give unrelated sequences. `derive` builds a child stream
/// without touching the parent's state, which is how per-image and
/// per-trial randomness is assigned independently of scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  Rng derive(std::uint64_t a) const;
  Rng derive(std::uint64_t a, std::uint64_t b) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }
  std::uint64_t next();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (both outputs are used).
  double gauss();
  /// Laplace with scale b by inverse CDF.
  double laplace(double b);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class NoiseKind { gauss, uniform, laplace };

const char* to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

/// A zero-mean distribution in its native parameterization:
/// gauss(sigma), uniform(-B, B), laplace(b).
struct Distribution {
  NoiseKind kind = NoiseKind::gauss;
  double scale = 0.0;

  /// Distribution of the given kind whose standard deviation is `sigma`
  /// (B = sigma*sqrt(3), b = sigma/sqrt(2)).
  static Distribution with_stddev(NoiseKind kind, double sigma);
};

double draw(Rng& rng, const Distribution& dist);

/// I.i.d. draws of `dist` in a tensor of the given shape.
Tensor sample(Rng& rng, const Distribution& dist, const Shape& shape);

/// In-place Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace plab
