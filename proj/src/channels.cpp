#include "plab/channels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "plab/parallel.hpp"
#include "plab/spectral.hpp"

namespace plab {

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Views x as `planes` row-major H x W matrices.
struct Planes {
  std::size_t count, height, width;
};

Planes planes_of(const Tensor& x, const char* what) {
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
  throw DimensionError(std::string(what) + " expects [C, H, W] or [H, W], got " + shape_string(x.shape()));
}

}  // namespace

std::string Channel::family() const {
  switch (kind) {
    case Kind::empty: return "empty";
    case Kind::fc: return "fc";
    case Kind::cd: return "cd";
    case Kind::svd: return "svd";
    case Kind::noise: return to_string(noise);
  }
  return "?";
}

std::string Channel::descriptor() const {
  if (kind == Kind::empty) return "empty";
  if (kind == Kind::cd) return "cd:" + std::to_string(static_cast<int>(strength));
  return family() + ":" + format_number(strength);
}

void Channel::validate() const {
  switch (kind) {
    case Kind::empty: return;
    case Kind::fc:
      if (!(strength >= 0.0 && strength <= 1.0)) throw ParameterError("fc kept fraction must be in [0, 1]");
      return;
    case Kind::cd:
      if (!(strength >= 1.0 && strength <= 8.0) || strength != std::floor(strength)) {
        throw ParameterError("cd bits must be an integer in [1, 8]");
      }
      return;
    case Kind::svd:
      if (!(strength > 0.0 && strength <= 1.0)) throw ParameterError("svd kept-rank fraction must be in (0, 1]");
      return;
    case Kind::noise:
      if (!(strength >= 0.0)) throw ParameterError("noise sigma must be non-negative");
      return;
  }
}

Channel Channel::parse(const std::string& descriptor) {
  if (descriptor == "empty") return identity();
  const auto colon = descriptor.find(':');
  if (colon == std::string::npos) throw ConfigError("channel descriptor '" + descriptor + "' lacks ':<strength>'");
  const std::string name = descriptor.substr(0, colon);
  const std::string value = descriptor.substr(colon + 1);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    throw ConfigError("channel descriptor '" + descriptor + "' has a non-numeric strength");
  }
  Channel c;
  if (name == "fc") {
    c = fc(v);
  } else if (name == "cd") {
    c = Channel{Kind::cd, v, NoiseKind::gauss};
  } else if (name == "svd") {
    c = svd(v);
  } else if (name == "gauss" || name == "uniform" || name == "laplace") {
    c = additive(parse_noise_kind(name), v);
  } else {
    throw ConfigError("unknown channel '" + name + "' (expected fc, cd, svd, gauss, uniform, laplace or empty)");
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("channel descriptor '" + descriptor + "': " + e.what());
  }
  return c;
}

Tensor cd_quantize(const Tensor& x, int bits) {
  if (bits < 1 || bits > 8) throw ParameterError("cd bits must be in [1, 8]");
  const double levels = static_cast<double>((1 << bits) - 1);
  Tensor out = x;
  // std::round rounds halfway cases away from zero.
  for (double& v : out.data()) v = std::round(levels * std::clamp(v, 0.0, 1.0)) / levels;
  return out;
}

std::size_t frequency_ring(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  return std::max(std::min(u, height - u), std::min(v, width - v));
}

Tensor fc_filter_linear(const Tensor& x, double keep_fraction) {
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) throw ParameterError("fc kept fraction must be in [0, 1]");
  const Planes p = planes_of(x, "fc_filter");
  if (!is_power_of_two(p.height) || !is_power_of_two(p.width)) {
    throw DimensionError("fc_filter requires power-of-two spatial sizes, got " + shape_string(x.shape()));
  }
  const std::size_t max_ring = std::max(p.height, p.width) / 2;
  const double threshold = keep_fraction * static_cast<double>(max_ring) + 1e-9;
  const std::size_t plane = p.height * p.width;
  Tensor out(x.shape());
  std::vector<std::complex<double>> buf(plane);
  for (std::size_t c = 0; c < p.count; ++c) {
    for (std::size_t i = 0; i < plane; ++i) buf[i] = {x[c * plane + i], 0.0};
    fft2_inplace(buf, p.height, p.width, FftDirection::forward);
    for (std::size_t u = 0; u < p.height; ++u)
      for (std::size_t v = 0; v < p.width; ++v)
        if (static_cast<double>(frequency_ring(u, v, p.height, p.width)) > threshold) buf[u * p.width + v] = 0.0;
    fft2_inplace(buf, p.height, p.width, FftDirection::inverse);
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = buf[i].real();
  }
  return out;
}

Tensor fc_filter(const Tensor& x, double keep_fraction) {
  return clamp(fc_filter_linear(x, keep_fraction), 0.0, 1.0);
}

Tensor svd_reduce(const Tensor& x, double rank_fraction) {
  if (!(rank_fraction > 0.0 && rank_fraction <= 1.0)) throw ParameterError("svd kept-rank fraction must be in (0, 1]");
  const Planes p = planes_of(x, "svd_reduce");
  const std::size_t keep =
      static_cast<std::size_t>(std::ceil(rank_fraction * static_cast<double>(std::min(p.height, p.width)) - 1e-9));
  const std::size_t plane = p.height * p.width;
  Tensor out(x.shape());
  for (std::size_t c = 0; c < p.count; ++c) {
    Tensor m({p.height, p.width}, std::vector<double>(x.data().begin() + static_cast<std::ptrdiff_t>(c * plane),
                                                     x.data().begin() + static_cast<std::ptrdiff_t>((c + 1) * plane)));
    const Tensor r = svd_reconstruct(svd_small(m), keep);
    std::copy(r.data().begin(), r.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(c * plane));
  }
  return clamp(out, 0.0, 1.0);
}

Tensor apply_channel(const Channel& c, const Tensor& x, Rng& rng) {
  c.validate();
  switch (c.kind) {
    case Channel::Kind::empty: return x;
    case Channel::Kind::fc: return fc_filter(x, c.strength);
    case Channel::Kind::cd: return cd_quantize(x, static_cast<int>(c.strength));
    case Channel::Kind::svd: return svd_reduce(x, c.strength);
    case Channel::Kind::noise: {
      if (c.strength == 0.0) return x;
      Tensor out = x;
      const Distribution d = Distribution::with_stddev(c.noise, c.strength);
      for (double& v : out.data()) v = std::clamp(v + draw(rng, d), 0.0, 1.0);
      return out;
    }
  }
  return x;
}

Tensor channel_backward(const Channel& c, const Tensor& x, const Tensor& upstream) {
  require_same_shape(x, upstream, "channel_backward");
  if (c.kind != Channel::Kind::fc) return upstream;
  // d clamp(P x) / dx = P^T diag(inside) with P symmetric (real, conjugate-symmetric mask).
  const Tensor filtered = fc_filter_linear(x, c.strength);
  Tensor g = upstream;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (filtered[i] < 0.0 || filtered[i] > 1.0) g[i] = 0.0;
  return fc_filter_linear(g, c.strength);
}

double channel_distortion(const Channel& c, std::span<const Tensor> xs, const Rng& rng, std::size_t trials) {
  if (xs.empty()) throw ArgumentError("channel_distortion needs at least one example");
  if (trials == 0) throw ArgumentError("channel_distortion needs trials >= 1");
  c.validate();
  const std::size_t draws = c.stochastic() ? trials : 1;
  std::vector<double> per_image(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < draws; ++t) {
      Rng r = rng.derive(i, t);
      acc += l2_distance(apply_channel(c, xs[i], r), xs[i]);
    }
    per_image[i] = acc / static_cast<double>(draws);
  });
  double total = 0.0;
  for (double v : per_image) total += v;
  return total / static_cast<double>(xs.size());
}

}  // namespace plab
