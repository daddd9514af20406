// Independent reference implementations used to check the library.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "plab/tensor.hpp"

namespace oracle {

/// Direct O(N^2) 2-D DFT of a real H x W array (row-major).
inline std::vector<std::complex<double>> dft2(const std::vector<double>& x, std::size_t h, std::size_t w) {
  const double pi = std::acos(-1.0);
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double phase = -2.0 * pi * (static_cast<double>(u * i) / h + static_cast<double>(v * j) / w);
          acc += x[i * w + j] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      out[u * w + v] = acc;
    }
  return out;
}

/// Cyclic Jacobi eigenvalues of a symmetric n x n matrix (long double sweeps).
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a_in, std::size_t n) {
  std::vector<long double> a(a_in.begin(), a_in.end());
  auto at = [&](std::size_t i, std::size_t j) -> long double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30L) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(at(p, q)) < 1e-300L) continue;
        const long double theta = (at(q, q) - at(p, p)) / (2 * at(p, q));
        const long double t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const long double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = static_cast<double>(at(i, i));
  return eig;
}

/// Naive nested-loop convolution (cross-correlation) with zero padding.
inline plab::Tensor conv_loops(const plab::Tensor& x, const plab::Tensor& k, std::size_t stride, std::size_t pad) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t f = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  plab::Tensor y({f, oh, ow});
  for (std::size_t o = 0; o < f; ++o)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0;
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t a = 0; a < kh; ++a)
            for (std::size_t b = 0; b < kw; ++b) {
              const long ii = static_cast<long>(i * stride + a) - static_cast<long>(pad);
              const long jj = static_cast<long>(j * stride + b) - static_cast<long>(pad);
              if (ii < 0 || jj < 0 || ii >= static_cast<long>(h) || jj >= static_cast<long>(w)) continue;
              acc += k[((o * c + ch) * kh + a) * kw + b] * x[(ch * h + ii) * w + jj];
            }
        y[(o * oh + i) * ow + j] = acc;
      }
  return y;
}

/// Central difference of f along direction d.
inline double directional_fd(const std::function<double(const plab::Tensor&)>& f, const plab::Tensor& x,
                             const plab::Tensor& d, double h) {
  plab::Tensor p = x, m = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] += h * d[i];
    m[i] -= h * d[i];
  }
  return (f(p) - f(m)) / (2 * h);
}

}  // namespace oracle
