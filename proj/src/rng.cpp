#include "plab/rng.hpp"

#include <cmath>
#include <numbers>

namespace plab {

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t value) {
  std::uint64_t state = value;
  return splitmix64(state);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {
  std::uint64_t sm = seed ^ mix64(stream_id);
  for (auto& word : s_) word = splitmix64(sm);
}

Rng Rng::derive(std::uint64_t a) const { return Rng(seed_, mix64(stream_ ^ mix64(a + 0x632be59bd9b4e019ULL))); }

Rng Rng::derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ParameterError("Rng::below requires n > 0");
  // Lemire's rejection on the widened product.
  std::uint64_t x = next();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::gauss() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::laplace(double b) {
  double u = uniform() - 0.5;
  while (u == -0.5) u = uniform() - 0.5;
  const double s = u < 0.0 ? -1.0 : 1.0;
  return -b * s * std::log(1.0 - 2.0 * std::abs(u));
}

const char* to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gauss: return "gauss";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::laplace: return "laplace";
  }
  return "?";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gauss") return NoiseKind::gauss;
  if (name == "uniform") return NoiseKind::uniform;
  if (name == "laplace") return NoiseKind::laplace;
  throw ConfigError("unknown noise distribution '" + name + "' (expected gauss, uniform or laplace)");
}

Distribution Distribution::with_stddev(NoiseKind kind, double sigma) {
  switch (kind) {
    case NoiseKind::gauss: return {kind, sigma};
    case NoiseKind::uniform: return {kind, sigma * std::sqrt(3.0)};
    case NoiseKind::laplace: return {kind, sigma / std::sqrt(2.0)};
  }
  return {kind, sigma};
}

double draw(Rng& rng, const Distribution& dist) {
  switch (dist.kind) {
    case NoiseKind::gauss: return dist.scale * rng.gauss();
    case NoiseKind::uniform: return rng.uniform(-dist.scale, dist.scale);
    case NoiseKind::laplace: return rng.laplace(dist.scale);
  }
  return 0.0;
}

Tensor sample(Rng& rng, const Distribution& dist, const Shape& shape) {
  if (!(dist.scale >= 0.0)) throw ParameterError("noise scale must be non-negative");
  Tensor out(shape);
  if (dist.scale == 0.0) return out;
  for (double& v : out.data()) v = draw(rng, dist);
  return out;
}

}  // namespace plab
