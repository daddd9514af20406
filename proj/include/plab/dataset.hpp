#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plab/tensor.hpp"

namespace plab {

enum class Split : std::uint8_t { train, test };

/// Images [C, H, W] with values in [0, 1] and integer labels in [0, k).
struct Dataset {
  std::vector<Tensor> images;
  std::vector<int> labels;
  std::vector<Split> splits;
  std::size_t num_classes = 0;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  Shape image_shape() const { return images.empty() ? Shape{} : images.front().shape(); }

  /// Examples tagged with `split`, in original order.
  Dataset subset(Split split) const;
  /// The first `n` examples (or all of them).
  Dataset head(std::size_t n) const;
  void push_back(Tensor image, int label, Split split = Split::train);
  /// Throws FormatError unless shapes are equal and labels in range.
  void validate() const;
};

/// Records of 1 label byte followed by 3072 planar RGB bytes (32x32).
Dataset load_binary_dataset(const std::string& path, std::size_t num_classes = 10);

struct SyntheticConfig {
  std::size_t n = 2000;
  std::size_t k = 4;
  std::size_t channels = 3;
  std::size_t size = 16;
  double noise_level = 0.1;
  double contrast = 0.05;
};

/// Number of distinct class templates available to gen_synthetic.
constexpr std::size_t kTemplateCount = 10;

/// The noise-free template image for class `label`.
Tensor synthetic_template(std::size_t label, const SyntheticConfig& cfg);

/// Balanced, shuffled template-plus-noise dataset; the first 80% of the
/// generated order is tagged train and the rest test.
Dataset gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace plab
