#include <algorithm>

#include <Eigen/Core>

#include "snn/tensor/ops.hpp"

namespace snn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// cols[(c*Kh + ky)*Kw + kx][oy*Wout + ox] = x[c][oy*s - p + ky][ox*s - p + kx]
template <typename T>
void im2col(const T* x, const Conv2dGeometry& g, T* cols) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        T* row = cols + ((c * g.kernel_h + ky) * g.kernel_w + kx) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          T* dst = row + oy * ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = x + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w))
                          ? T(0)
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
}

template <typename T>
void col2im_add(const T* cols, const Conv2dGeometry& g, T* dx) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = cols + ((c * g.kernel_h + ky) * g.kernel_w + kx) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          T* dst = dx + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            dst[static_cast<std::size_t>(ix)] += row[oy * ow + ox];
          }
        }
      }
}

bool is_pointwise(const Conv2dGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.padding == 0;
}

}  // namespace

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, std::size_t stride,
                  std::size_t padding) {
  if (input.rank() != 4 || weight.rank() != 4) {
    throw ShapeError("conv2d: expected input [B,Cin,H,W] and weight [Cout,Cin,Kh,Kw], got " +
                     shape_str(input.shape()) + " and " + shape_str(weight.shape()));
  }
  if (input.dim(1) != weight.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(1)) +
                     " channels but weight expects " + std::to_string(weight.dim(1)));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  Conv2dGeometry g;
  g.in_channels = input.dim(1);
  g.out_channels = weight.dim(0);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = stride;
  g.padding = padding;
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  if (g.kernel_h > g.in_h + 2 * padding || g.kernel_w > g.in_w + 2 * padding) {
    throw ShapeError("conv2d: kernel " + shape_str(weight.shape()) + " exceeds padded input " +
                     shape_str(input.shape()));
  }
  const std::size_t batch = input.dim(0);
  const std::size_t ck = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t hw_out = g.out_h() * g.out_w();
  const std::size_t in_size = g.in_channels * g.in_h * g.in_w;
  const std::size_t out_size = g.out_channels * hw_out;

  std::vector<T> out(batch * out_size);
  std::vector<T> cols(is_pointwise(g) ? 0 : ck * hw_out);
  Eigen::Map<const RowMat<T>> w(weight.data().data(), g.out_channels, ck);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* x = input.data().data() + b * in_size;
    const T* c = x;
    if (!is_pointwise(g)) {
      im2col(x, g, cols.data());
      c = cols.data();
    }
    Eigen::Map<const RowMat<T>> cm(c, ck, hw_out);
    Eigen::Map<RowMat<T>> om(out.data() + b * out_size, g.out_channels, hw_out);
    om.noalias() = w * cm;
  }

  return make_result<T>(
      {batch, g.out_channels, g.out_h(), g.out_w()}, std::move(out), {input, weight},
      [g, batch, ck, hw_out, in_size, out_size](detail::Node<T>& self) {
        auto& nx = *self.inputs[0];
        auto& nw = *self.inputs[1];
        Eigen::Map<const RowMat<T>> w(nw.data.data(), g.out_channels, ck);
        std::vector<T> cols(ck * hw_out);
        std::vector<T> dcols(nx.requires_grad && !is_pointwise(g) ? ck * hw_out : 0);
        T* gw_ptr = nw.requires_grad ? nw.ensure_grad().data() : nullptr;
        T* gx_ptr = nx.requires_grad ? nx.ensure_grad().data() : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          Eigen::Map<const RowMat<T>> go(self.grad.data() + b * out_size, g.out_channels, hw_out);
          const T* x = nx.data.data() + b * in_size;
          if (gw_ptr) {
            const T* c = x;
            if (!is_pointwise(g)) {
              im2col(x, g, cols.data());
              c = cols.data();
            }
            Eigen::Map<const RowMat<T>> cm(c, ck, hw_out);
            Eigen::Map<RowMat<T>> gw(gw_ptr, g.out_channels, ck);
            gw.noalias() += go * cm.transpose();
          }
          if (gx_ptr) {
            if (is_pointwise(g)) {
              Eigen::Map<RowMat<T>> gx(gx_ptr + b * in_size, ck, hw_out);
              gx.noalias() += w.transpose() * go;
            } else {
              Eigen::Map<RowMat<T>> dc(dcols.data(), ck, hw_out);
              dc.noalias() = w.transpose() * go;
              col2im_add(dcols.data(), g, gx_ptr + b * in_size);
            }
          }
        }
      });
}

template TensorT<float> conv2d(const TensorT<float>&, const TensorT<float>&, std::size_t, std::size_t);
template TensorT<double> conv2d(const TensorT<double>&, const TensorT<double>&, std::size_t, std::size_t);

}  // namespace snn
