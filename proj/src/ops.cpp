#include "plab/ops.hpp"

#include <algorithm>
#include <cmath>

namespace plab {

std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ParameterError("convolution stride must be >= 1");
  if (in + 2 * pad < kernel) throw DimensionError("convolution kernel larger than padded input");
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t filters, kh, kw;
  std::size_t out_h, out_w;
};

ConvGeometry check_conv(const Shape& x, const Shape& k, std::size_t stride, std::size_t pad) {
  if (x.size() != 3) throw DimensionError("conv2d input must be [C, H, W], got " + shape_string(x));
  if (k.size() != 4) throw DimensionError("conv2d kernel must be [F, C, Kh, Kw], got " + shape_string(k));
  if (k[1] != x[0]) {
    throw DimensionError("conv2d channel mismatch: input " + shape_string(x) + ", kernel " + shape_string(k));
  }
  if (k[2] % 2 == 0 || k[3] % 2 == 0) throw DimensionError("conv2d kernel sizes must be odd");
  ConvGeometry g{x[0], x[1], x[2], k[0], k[2], k[3], 0, 0};
  g.out_h = conv_out_size(g.height, g.kh, stride, pad);
  g.out_w = conv_out_size(g.width, g.kw, stride, pad);
  return g;
}

// Range of output indices o for which o*stride + a - pad lies in [0, n).
inline void valid_range(std::size_t a, std::size_t n, std::size_t out, std::size_t stride, std::size_t pad,
                        std::size_t& lo, std::size_t& hi) {
  const long long first = static_cast<long long>(pad) - static_cast<long long>(a);
  lo = first <= 0 ? 0 : static_cast<std::size_t>((first + static_cast<long long>(stride) - 1) / static_cast<long long>(stride));
  const long long last = static_cast<long long>(n) - 1 + static_cast<long long>(pad) - static_cast<long long>(a);
  if (last < 0) {
    hi = 0;
    lo = 0;
    return;
  }
  hi = std::min(out, static_cast<std::size_t>(last / static_cast<long long>(stride)) + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& k, std::size_t stride, std::size_t pad) {
  const ConvGeometry g = check_conv(x.shape(), k.shape(), stride, pad);
  Tensor y({g.filters, g.out_h, g.out_w});
  const double* xd = x.data().data();
  const double* kd = k.data().data();
  double* yd = y.data().data();
  for (std::size_t f = 0; f < g.filters; ++f) {
    double* yf = yd + f * g.out_h * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c) {
      const double* xc = xd + c * g.height * g.width;
      for (std::size_t a = 0; a < g.kh; ++a) {
        std::size_t i0, i1;
        valid_range(a, g.height, g.out_h, stride, pad, i0, i1);
        for (std::size_t b = 0; b < g.kw; ++b) {
          const double wv = kd[((f * g.channels + c) * g.kh + a) * g.kw + b];
          std::size_t j0, j1;
          valid_range(b, g.width, g.out_w, stride, pad, j0, j1);
          for (std::size_t i = i0; i < i1; ++i) {
            const double* xrow = xc + (i * stride + a - pad) * g.width;
            double* yrow = yf + i * g.out_w;
            for (std::size_t j = j0; j < j1; ++j) yrow[j] += wv * xrow[j * stride + b - pad];
          }
        }
      }
    }
  }
  return y;
}

Tensor conv2d_backward_input(const Tensor& dy, const Tensor& k, const Shape& x_shape, std::size_t stride,
                             std::size_t pad) {
  const ConvGeometry g = check_conv(x_shape, k.shape(), stride, pad);
  if (dy.shape() != Shape{g.filters, g.out_h, g.out_w}) throw DimensionError("conv2d upstream gradient shape");
  Tensor dx(x_shape);
  const double* kd = k.data().data();
  const double* dyd = dy.data().data();
  double* dxd = dx.data().data();
  for (std::size_t f = 0; f < g.filters; ++f) {
    const double* dyf = dyd + f * g.out_h * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c) {
      double* dxc = dxd + c * g.height * g.width;
      for (std::size_t a = 0; a < g.kh; ++a) {
        std::size_t i0, i1;
        valid_range(a, g.height, g.out_h, stride, pad, i0, i1);
        for (std::size_t b = 0; b < g.kw; ++b) {
          const double wv = kd[((f * g.channels + c) * g.kh + a) * g.kw + b];
          std::size_t j0, j1;
          valid_range(b, g.width, g.out_w, stride, pad, j0, j1);
          for (std::size_t i = i0; i < i1; ++i) {
            double* dxrow = dxc + (i * stride + a - pad) * g.width;
            const double* dyrow = dyf + i * g.out_w;
            for (std::size_t j = j0; j < j1; ++j) dxrow[j * stride + b - pad] += wv * dyrow[j];
          }
        }
      }
    }
  }
  return dx;
}

Tensor conv2d_backward_kernel(const Tensor& dy, const Tensor& x, const Shape& k_shape, std::size_t stride,
                              std::size_t pad) {
  const ConvGeometry g = check_conv(x.shape(), k_shape, stride, pad);
  if (dy.shape() != Shape{g.filters, g.out_h, g.out_w}) throw DimensionError("conv2d upstream gradient shape");
  Tensor dk(k_shape);
  const double* xd = x.data().data();
  const double* dyd = dy.data().data();
  double* dkd = dk.data().data();
  for (std::size_t f = 0; f < g.filters; ++f) {
    const double* dyf = dyd + f * g.out_h * g.out_w;
    for (std::size_t c = 0; c < g.channels; ++c) {
      const double* xc = xd + c * g.height * g.width;
      for (std::size_t a = 0; a < g.kh; ++a) {
        std::size_t i0, i1;
        valid_range(a, g.height, g.out_h, stride, pad, i0, i1);
        for (std::size_t b = 0; b < g.kw; ++b) {
          std::size_t j0, j1;
          valid_range(b, g.width, g.out_w, stride, pad, j0, j1);
          double acc = 0.0;
          for (std::size_t i = i0; i < i1; ++i) {
            const double* xrow = xc + (i * stride + a - pad) * g.width;
            const double* dyrow = dyf + i * g.out_w;
            for (std::size_t j = j0; j < j1; ++j) acc += dyrow[j] * xrow[j * stride + b - pad];
          }
          dkd[((f * g.channels + c) * g.kh + a) * g.kw + b] += acc;
        }
      }
    }
  }
  return dk;
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  if (p.empty()) return p;
  const double m = max_value(p);
  double z = 0.0;
  for (double& v : p.data()) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : p.data()) v /= z;
  return p;
}

std::size_t argmax(const Tensor& a) {
  if (a.empty()) throw DimensionError("argmax of empty tensor");
  return static_cast<std::size_t>(std::max_element(a.data().begin(), a.data().end()) - a.data().begin());
}

}  // namespace plab
