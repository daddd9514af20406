#include "plab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace plab {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

using cplx = std::complex<double>;

// Iterative radix-2 Cooley-Tukey on a strided line of the buffer.
void fft1d(cplx* data, std::size_t n, std::size_t stride, bool inverse, std::vector<cplx>& scratch) {
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = data[i * stride];

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(scratch[i], scratch[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles from the exact angle rather than a running product keep
        // round-off at the level of a single sin/cos evaluation.
        const cplx w(std::cos(angle * static_cast<double>(k)), std::sin(angle * static_cast<double>(k)));
        const cplx a = scratch[start + k];
        const cplx b = scratch[start + k + half] * w;
        scratch[start + k] = a + b;
        scratch[start + k + half] = a - b;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) data[i * stride] = scratch[i];
}

}  // namespace

void fft2_inplace(std::vector<cplx>& buf, std::size_t height, std::size_t width, FftDirection direction) {
  if (!is_power_of_two(height) || !is_power_of_two(width)) {
    throw DimensionError("fft2 requires power-of-two sizes, got " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  if (buf.size() != height * width) throw DimensionError("fft2 buffer size mismatch");
  const bool inverse = direction == FftDirection::inverse;
  std::vector<cplx> scratch;
  for (std::size_t r = 0; r < height; ++r) fft1d(buf.data() + r * width, width, 1, inverse, scratch);
  for (std::size_t c = 0; c < width; ++c) fft1d(buf.data() + c, height, width, inverse, scratch);
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(height * width);
    for (cplx& v : buf) v *= scale;
  }
}

Tensor fft2(const Tensor& x, FftDirection direction) {
  const bool complex_input = x.rank() == 3 && x.dim(2) == 2;
  if (x.rank() != 2 && !complex_input) {
    throw DimensionError("fft2 expects [H, W] or [H, W, 2], got " + shape_string(x.shape()));
  }
  const std::size_t h = x.dim(0);
  const std::size_t w = x.dim(1);
  std::vector<cplx> buf(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    buf[i] = complex_input ? cplx(x[2 * i], x[2 * i + 1]) : cplx(x[i], 0.0);
  }
  fft2_inplace(buf, h, w, direction);
  Tensor out({h, w, 2});
  for (std::size_t i = 0; i < h * w; ++i) {
    out[2 * i] = buf[i].real();
    out[2 * i + 1] = buf[i].imag();
  }
  return out;
}

namespace {

// Column-major scratch matrix; Jacobi works column by column.
struct Columns {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Columns(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* col(std::size_t j) { return data.data() + j * rows; }
  const double* col(std::size_t j) const { return data.data() + j * rows; }
};

double col_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Extends the first `have` orthonormal columns of `q` to a full basis.
void complete_basis(Columns& q, std::size_t have) {
  std::vector<double> cand(q.rows);
  for (std::size_t e = 0; e < q.rows && have < q.cols; ++e) {
    std::fill(cand.begin(), cand.end(), 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < have; ++j) {
        const double p = col_dot(cand.data(), q.col(j), q.rows);
        for (std::size_t i = 0; i < q.rows; ++i) cand[i] -= p * q.col(j)[i];
      }
    }
    const double norm = std::sqrt(col_dot(cand.data(), cand.data(), q.rows));
    if (norm < 1e-6) continue;
    for (std::size_t i = 0; i < q.rows; ++i) q.col(have)[i] = cand[i] / norm;
    ++have;
  }
}

// One-sided Jacobi for a tall (rows >= cols) matrix given row-major.
SvdResult jacobi_tall(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
  Columns b(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) b.col(j)[i] = a[i * cols + j];
  Columns v(cols, cols);
  for (std::size_t j = 0; j < cols; ++j) v.col(j)[j] = 1.0;

  constexpr double kEps = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double* bp = b.col(p);
        double* bq = b.col(q);
        const double alpha = col_dot(bp, bp, rows);
        const double beta = col_dot(bq, bq, rows);
        const double gamma = col_dot(bp, bq, rows);
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double x = bp[i];
          const double y = bq[i];
          bp[i] = c * x - s * y;
          bq[i] = s * x + c * y;
        }
        double* vp = v.col(p);
        double* vq = v.col(q);
        for (std::size_t i = 0; i < cols; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(cols);
  for (std::size_t j = 0; j < cols; ++j) sigma[j] = std::sqrt(col_dot(b.col(j), b.col(j), rows));
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return sigma[l] > sigma[r]; });

  const double smax = cols ? sigma[order[0]] : 0.0;
  Columns u(rows, rows);
  Columns vs(cols, cols);
  SvdResult out;
  out.s = Tensor({cols});
  std::size_t nonzero = 0;
  for (std::size_t k = 0; k < cols; ++k) {
    const std::size_t j = order[k];
    out.s[k] = sigma[j];
    std::copy(v.col(j), v.col(j) + cols, vs.col(k));
    if (sigma[j] > 1e-13 * std::max(smax, 1e-300) && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < rows; ++i) u.col(k)[i] = b.col(j)[i] / sigma[j];
      nonzero = k + 1;
    }
  }
  // Columns for vanishing singular values are filled from the complement.
  complete_basis(u, nonzero);

  out.u = Tensor({rows, rows});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < rows; ++j) out.u.at(i, j) = u.col(j)[i];
  out.v = Tensor({cols, cols});
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.v.at(i, j) = vs.col(j)[i];
  return out;
}

}  // namespace

SvdResult svd_small(const Tensor& m) {
  if (m.rank() != 2) throw DimensionError("svd_small expects a 2-D tensor, got " + shape_string(m.shape()));
  const std::size_t h = m.dim(0);
  const std::size_t w = m.dim(1);
  if (h > 256 || w > 256) throw DimensionError("svd_small supports at most 256x256");
  if (h >= w) return jacobi_tall(m.values(), h, w);

  std::vector<double> t(w * h);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) t[j * h + i] = m.at(i, j);
  SvdResult r = jacobi_tall(t, w, h);
  std::swap(r.u, r.v);
  return r;
}

Tensor svd_reconstruct(const SvdResult& svd, std::size_t rank) {
  const std::size_t h = svd.u.dim(0);
  const std::size_t w = svd.v.dim(0);
  rank = std::min(rank, svd.s.size());
  Tensor out({h, w});
  for (std::size_t k = 0; k < rank; ++k) {
    const double s = svd.s[k];
    if (s == 0.0) continue;
    for (std::size_t i = 0; i < h; ++i) {
      const double us = svd.u.at(i, k) * s;
      for (std::size_t j = 0; j < w; ++j) out.at(i, j) += us * svd.v.at(j, k);
    }
  }
  return out;
}

}  // namespace plab
