#include "plab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "plab/rng.hpp"
#include "plab/spectral.hpp"

namespace plab {

Dataset Dataset::subset(Split split) const {
  Dataset out;
  out.num_classes = num_classes;
  for (std::size_t i = 0; i < size(); ++i)
    if (splits[i] == split) out.push_back(images[i], labels[i], splits[i]);
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  Dataset out;
  out.num_classes = num_classes;
  for (std::size_t i = 0; i < std::min(n, size()); ++i) out.push_back(images[i], labels[i], splits[i]);
  return out;
}

void Dataset::push_back(Tensor image, int label, Split split) {
  images.push_back(std::move(image));
  labels.push_back(label);
  splits.push_back(split);
}

void Dataset::validate() const {
  if (images.size() != labels.size() || images.size() != splits.size()) {
    throw FormatError("dataset field lengths disagree");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (images[i].shape() != images.front().shape()) throw FormatError("dataset images have unequal shapes");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw FormatError("label " + std::to_string(labels[i]) + " out of range at example " + std::to_string(i));
    }
  }
}

Dataset load_binary_dataset(const std::string& path, std::size_t num_classes) {
  constexpr std::size_t kPixels = 3 * 32 * 32;
  constexpr std::size_t kRecord = kPixels + 1;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty() || bytes.size() % kRecord != 0) {
    throw FormatError("'" + path + "' has " + std::to_string(bytes.size()) + " bytes, not a positive multiple of " +
                      std::to_string(kRecord));
  }
  Dataset ds;
  ds.num_classes = num_classes;
  const std::size_t records = bytes.size() / kRecord;
  for (std::size_t r = 0; r < records; ++r) {
    const auto* rec = reinterpret_cast<const unsigned char*>(bytes.data() + r * kRecord);
    if (rec[0] >= num_classes) {
      throw FormatError("record " + std::to_string(r) + " has label " + std::to_string(rec[0]) + " >= " +
                        std::to_string(num_classes));
    }
    Tensor img({3, 32, 32});
    for (std::size_t i = 0; i < kPixels; ++i) img[i] = static_cast<double>(rec[1 + i]) / 255.0;
    ds.push_back(std::move(img), rec[0], Split::train);
  }
  return ds;
}

namespace {

// Binary (or graded, for the gradient) pattern value in [0, 1] at (i, j).
double pattern(std::size_t label, std::size_t i, std::size_t j, std::size_t s) {
  const double n = static_cast<double>(s);
  const double y = static_cast<double>(i) + 0.5 - n / 2.0;
  const double x = static_cast<double>(j) + 0.5 - n / 2.0;
  const double r = std::sqrt(x * x + y * y);
  const std::size_t cell = std::max<std::size_t>(1, s / 4);
  const std::size_t edge = std::max<std::size_t>(1, s / 8);
  switch (label) {
    case 0: return std::abs(y) < n / 8.0 ? 1.0 : 0.0;                        // horizontal bar
    case 1: return std::abs(x) < n / 8.0 ? 1.0 : 0.0;                        // vertical bar
    case 2: return r < n / 4.0 ? 1.0 : 0.0;                                  // centered disc
    case 3: return ((i / cell) + (j / cell)) % 2 == 0 ? 1.0 : 0.0;            // checkerboard
    case 4: return std::abs(x - y) < n / 8.0 ? 1.0 : 0.0;                    // diagonal band
    case 5: return (r > n / 4.0 && r < 3.0 * n / 8.0) ? 1.0 : 0.0;           // ring
    case 6: return (std::abs(x) < n / 16.0 + 0.5 || std::abs(y) < n / 16.0 + 0.5) ? 1.0 : 0.0;  // plus
    case 7: return (i < s / 2 && j < s / 2) ? 1.0 : 0.0;                     // corner square
    case 8: return static_cast<double>(j) / (n - 1.0);                        // left-right ramp
    case 9: return (i < edge || j < edge || i >= s - edge || j >= s - edge) ? 1.0 : 0.0;  // frame
    default: return 0.0;
  }
}

}  // namespace

Tensor synthetic_template(std::size_t label, const SyntheticConfig& cfg) {
  if (label >= kTemplateCount) throw ConfigError("no template for class " + std::to_string(label));
  Tensor t({cfg.channels, cfg.size, cfg.size});
  for (std::size_t c = 0; c < cfg.channels; ++c)
    for (std::size_t i = 0; i < cfg.size; ++i)
      for (std::size_t j = 0; j < cfg.size; ++j)
        t.at(c, i, j) = std::clamp(0.5 + cfg.contrast * (2.0 * pattern(label, i, j, cfg.size) - 1.0), 0.0, 1.0);
  return t;
}

Dataset gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.k > kTemplateCount) {
    throw ConfigError("synthetic data supports at most " + std::to_string(kTemplateCount) + " classes, got " +
                      std::to_string(cfg.k));
  }
  if (cfg.k < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (!is_power_of_two(cfg.size)) throw ConfigError("synthetic image size must be a power of two");
  if (cfg.n == 0) throw ConfigError("synthetic dataset size must be positive");
  if (!(cfg.noise_level >= 0.0)) throw ConfigError("noise_level must be non-negative");

  std::vector<Tensor> templates;
  for (std::size_t c = 0; c < cfg.k; ++c) templates.push_back(synthetic_template(c, cfg));

  std::vector<std::size_t> labels(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) labels[i] = i % cfg.k;
  Rng order_rng(seed, 0x5eed);
  shuffle(labels, order_rng);

  Dataset ds;
  ds.num_classes = cfg.k;
  const std::size_t n_train = cfg.n * 4 / 5;
  const Rng base(seed, 0xda7a);
  const Distribution noise{NoiseKind::gauss, cfg.noise_level};
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Rng rng = base.derive(i);
    Tensor img = templates[labels[i]];
    if (cfg.noise_level > 0.0) {
      for (double& v : img.data()) v = std::clamp(v + draw(rng, noise), 0.0, 1.0);
    }
    ds.push_back(std::move(img), static_cast<int>(labels[i]), i < n_train ? Split::train : Split::test);
  }
  return ds;
}

}  // namespace plab
