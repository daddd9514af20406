#pragma once

#include "plab/tensor.hpp"

namespace plab {

/// Output spatial extent of a convolution along one axis.
std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

/// 2-D convolution of x [C, H, W] with k [F, C, Kh, Kw], zero padding.
///
/// Cross-correlation convention (no kernel flip):
///   y[f, i, j] = sum_{c, a, b} k[f, c, a, b] * x[c, i*stride + a - pad, j*stride + b - pad]
Tensor conv2d(const Tensor& x, const Tensor& k, std::size_t stride = 1, std::size_t pad = 0);

/// Gradient of sum(dy * conv2d(x, k)) with respect to x.
Tensor conv2d_backward_input(const Tensor& dy, const Tensor& k, const Shape& x_shape,
                             std::size_t stride, std::size_t pad);

/// Gradient of sum(dy * conv2d(x, k)) with respect to k.
Tensor conv2d_backward_kernel(const Tensor& dy, const Tensor& x, const Shape& k_shape,
                              std::size_t stride, std::size_t pad);

Tensor softmax(const Tensor& logits);
std::size_t argmax(const Tensor& a);

}  // namespace plab
