#pragma once

#include <complex>
#include <vector>

#include "plab/tensor.hpp"

namespace plab {

enum class FftDirection { forward, inverse };

bool is_power_of_two(std::size_t n);

/// In-place 2-D FFT over a row-major H x W complex buffer.
///
/// Forward is unnormalized, inverse carries the 1/(H*W) factor, so
/// sum |X|^2 = H*W * sum |x|^2. Both sizes must be powers of two.
void fft2_inplace(std::vector<std::complex<double>>& buf, std::size_t height, std::size_t width,
                  FftDirection direction);

/// 2-D FFT of a real [H, W] or complex [H, W, 2] tensor; the result is
/// [H, W, 2] with (real, imag) pairs in the last axis.
Tensor fft2(const Tensor& x, FftDirection direction = FftDirection::forward);

struct SvdResult {
  Tensor u;  // [H, H], orthonormal
  Tensor s;  // [min(H, W)], non-negative, non-increasing
  Tensor v;  // [W, W], orthonormal
};

/// Thin-to-full SVD of a 2-D tensor by one-sided Jacobi rotations.
SvdResult svd_small(const Tensor& m);

/// Rebuilds U * diag(s) * V^T keeping only the leading `rank` singular values.
Tensor svd_reconstruct(const SvdResult& svd, std::size_t rank);

}  // namespace plab
