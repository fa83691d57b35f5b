#include "birdxfer/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "birdxfer/error.hpp"

namespace birdxfer::nn {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

// NCHW -> C x (N*H*W)
template <typename T>
void to_channel_major(const Tensor<T>& x, T* dst) {
  const std::size_t hw = x.plane();
  const std::size_t ld = static_cast<std::size_t>(x.n) * hw;
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      std::copy_n(x.data.data() + (static_cast<std::size_t>(n) * x.c + c) * hw, hw, dst + c * ld + n * hw);
}

template <typename T>
void from_channel_major(const T* src, Tensor<T>& y) {
  const std::size_t hw = y.plane();
  const std::size_t ld = static_cast<std::size_t>(y.n) * hw;
  for (int n = 0; n < y.n; ++n)
    for (int c = 0; c < y.c; ++c)
      std::copy_n(src + c * ld + n * hw, hw, y.data.data() + (static_cast<std::size_t>(n) * y.c + c) * hw);
}

template <typename T>
void im2col_batch(const Tensor<T>& x, int k, int stride, int pad, int oh, int ow, T* cols) {
  const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
  const std::size_t ld = static_cast<std::size_t>(x.n) * ohw;
  for (int n = 0; n < x.n; ++n) {
    const T* src = x.sample(n);
    for (int ci = 0; ci < x.c; ++ci)
      for (int ki = 0; ki < k; ++ki)
        for (int kj = 0; kj < k; ++kj) {
          T* row = cols + static_cast<std::size_t>((ci * k + ki) * k + kj) * ld + n * ohw;
          const T* plane = src + static_cast<std::size_t>(ci) * x.h * x.w;
          for (int y = 0; y < oh; ++y) {
            const int iy = y * stride - pad + ki;
            T* out_row = row + static_cast<std::size_t>(y) * ow;
            if (iy < 0 || iy >= x.h) {
              std::fill_n(out_row, ow, T{});
              continue;
            }
            const T* in_row = plane + static_cast<std::size_t>(iy) * x.w;
            for (int xo = 0; xo < ow; ++xo) {
              const int ix = xo * stride - pad + kj;
              out_row[xo] = (ix >= 0 && ix < x.w) ? in_row[ix] : T{};
            }
          }
        }
  }
}

template <typename T>
void col2im_batch(const T* cols, int k, int stride, int pad, int oh, int ow, Tensor<T>& gx) {
  const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
  const std::size_t ld = static_cast<std::size_t>(gx.n) * ohw;
  for (int n = 0; n < gx.n; ++n) {
    T* dst = gx.sample(n);
    for (int ci = 0; ci < gx.c; ++ci)
      for (int ki = 0; ki < k; ++ki)
        for (int kj = 0; kj < k; ++kj) {
          const T* row = cols + static_cast<std::size_t>((ci * k + ki) * k + kj) * ld + n * ohw;
          T* plane = dst + static_cast<std::size_t>(ci) * gx.h * gx.w;
          for (int y = 0; y < oh; ++y) {
            const int iy = y * stride - pad + ki;
            if (iy < 0 || iy >= gx.h) continue;
            T* in_row = plane + static_cast<std::size_t>(iy) * gx.w;
            const T* g_row = row + static_cast<std::size_t>(y) * ow;
            for (int xo = 0; xo < ow; ++xo) {
              const int ix = xo * stride - pad + kj;
              if (ix >= 0 && ix < gx.w) in_row[ix] += g_row[xo];
            }
          }
        }
  }
}

}  // namespace

double glorot_bound(double fan_in, double fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); }

template <typename T>
void fill_uniform(Tensor<T>& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.data) v = static_cast<T>(dist(rng));
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_shape(src)) throw InvalidArgument("add: shape mismatch " + dst.shape_string() + " vs " + src.shape_string());
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& logits) {
  Tensor<T> out = zeros_like(logits);
  for (std::size_t i = 0; i < logits.data.size(); ++i) {
    const T z = logits.data[i];
    out.data[i] = z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
  }
  return out;
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias)
    : weight(out_channels, in_channels, kernel, kernel),
      weight_grad(out_channels, in_channels, kernel, kernel),
      in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding), has_bias_(bias) {
  if (bias) {
    this->bias = Tensor<T>(1, out_channels, 1, 1);
    bias_grad = Tensor<T>(1, out_channels, 1, 1);
  }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool keep) {
  if (x.c != in_) {
    throw InvalidArgument("conv: expected " + std::to_string(in_) + " input channels, got " + x.shape_string());
  }
  const int oh = output_size(x.h);
  const int ow = output_size(x.w);
  if (oh < 1 || ow < 1) throw InvalidArgument("conv: input too small " + x.shape_string());
  const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
  const std::size_t ld = static_cast<std::size_t>(x.n) * ohw;
  const int kk = in_ * k_ * k_;

  AlignedVector<T> cols(static_cast<std::size_t>(kk) * ld);
  if (pointwise()) {
    to_channel_major(x, cols.data());
  } else {
    im2col_batch(x, k_, stride_, pad_, oh, ow, cols.data());
  }
  AlignedVector<T> result(static_cast<std::size_t>(out_) * ld);
  MapR<T> y_mat(result.data(), out_, static_cast<Eigen::Index>(ld));
  y_mat.noalias() = CMapR<T>(weight.data.data(), out_, kk) * CMapR<T>(cols.data(), kk, static_cast<Eigen::Index>(ld));
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) y_mat.row(o).array() += bias.data[o];
  }
  Tensor<T> y(x.n, out_, oh, ow);
  from_channel_major(result.data(), y);
  if (keep) input_ = x;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  const Tensor<T>& x = input_;
  if (x.data.empty()) throw Error(ErrorCode::kInternal, "conv backward without cached forward");
  const int oh = grad_out.h;
  const int ow = grad_out.w;
  const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
  const std::size_t ld = static_cast<std::size_t>(x.n) * ohw;
  const int kk = in_ * k_ * k_;

  AlignedVector<T> gy(static_cast<std::size_t>(out_) * ld);
  to_channel_major(grad_out, gy.data());
  CMapR<T> gy_mat(gy.data(), out_, static_cast<Eigen::Index>(ld));

  // Rebuild the column matrix from the cached input.
  AlignedVector<T> cols(static_cast<std::size_t>(kk) * ld);
  if (pointwise()) {
    to_channel_major(x, cols.data());
  } else {
    im2col_batch(x, k_, stride_, pad_, oh, ow, cols.data());
  }
  CMapR<T> cols_mat(cols.data(), kk, static_cast<Eigen::Index>(ld));
  MapR<T>(weight_grad.data.data(), out_, kk).noalias() += gy_mat * cols_mat.transpose();
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) bias_grad.data[o] += gy_mat.row(o).sum();
  }
  if (!need_input_grad) return {};

  MatR<T> gcols = CMapR<T>(weight.data.data(), out_, kk).transpose() * gy_mat;
  Tensor<T> gx = zeros_like(x);
  if (pointwise()) {
    from_channel_major(gcols.data(), gx);
    return gx;
  }
  col2im_batch(gcols.data(), k_, stride_, pad_, oh, ow, gx);
  return gx;
}

template <typename T>
void Conv2d<T>::collect(TensorRegistry<T>& reg, const std::string& weight_name, const std::string& bias_name) {
  reg.params.push_back({weight_name, &weight, &weight_grad});
  if (has_bias_) reg.params.push_back({bias_name, &bias, &bias_grad});
}

// ----------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels, double eps, double momentum)
    : gamma(1, channels, 1, 1, T(1)), beta(1, channels, 1, 1), gamma_grad(1, channels, 1, 1),
      beta_grad(1, channels, 1, 1), running_mean(1, channels, 1, 1), running_var(1, channels, 1, 1, T(1)),
      channels_(channels), eps_(eps), momentum_(momentum) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode, bool keep) {
  if (x.c != channels_) throw InvalidArgument("batchnorm: channel mismatch " + x.shape_string());
  const std::size_t hw = x.plane();
  const double count = static_cast<double>(x.n) * hw;
  Tensor<T> y = zeros_like(x);
  AlignedVector<T> inv_std(channels_);
  Tensor<T> xhat;
  if (keep) xhat = zeros_like(x);
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (int n = 0; n < x.n; ++n) {
        const T* p = x.data.data() + (static_cast<std::size_t>(n) * x.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < x.n; ++n) {
        const T* p = x.data.data() + (static_cast<std::size_t>(n) * x.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      running_mean.data[c] = static_cast<T>((1.0 - momentum_) * running_mean.data[c] + momentum_ * mean);
      running_var.data[c] = static_cast<T>((1.0 - momentum_) * running_var.data[c] + momentum_ * unbiased);
    } else {
      mean = running_mean.data[c];
      var = running_var.data[c];
    }
    const T istd = static_cast<T>(1.0 / std::sqrt(var + eps_));
    inv_std[c] = istd;
    const T g = gamma.data[c];
    const T b = beta.data[c];
    const T m = static_cast<T>(mean);
    for (int n = 0; n < x.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * x.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T xh = (x.data[off + i] - m) * istd;
        if (keep) xhat.data[off + i] = xh;
        y.data[off + i] = g * xh + b;
      }
    }
  }
  if (keep) {
    xhat_ = std::move(xhat);
    inv_std_ = std::move(inv_std);
    cached_mode_ = mode;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
  if (!xhat_.same_shape(grad_out)) throw Error(ErrorCode::kInternal, "batchnorm backward without cached forward");
  const std::size_t hw = grad_out.plane();
  const double count = static_cast<double>(grad_out.n) * hw;
  Tensor<T> gx = zeros_like(grad_out);
  for (int c = 0; c < channels_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < grad_out.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * grad_out.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_g += grad_out.data[off + i];
        sum_gx += static_cast<double>(grad_out.data[off + i]) * xhat_.data[off + i];
      }
    }
    gamma_grad.data[c] += static_cast<T>(sum_gx);
    beta_grad.data[c] += static_cast<T>(sum_g);
    const double g = gamma.data[c];
    const double istd = inv_std_[c];
    for (int n = 0; n < grad_out.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * grad_out.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        if (cached_mode_ == Mode::kTrain) {
          const double v = grad_out.data[off + i] - sum_g / count - xhat_.data[off + i] * sum_gx / count;
          gx.data[off + i] = static_cast<T>(g * istd * v);
        } else {
          gx.data[off + i] = static_cast<T>(g * istd * grad_out.data[off + i]);
        }
      }
    }
  }
  return gx;
}

template <typename T>
void BatchNorm2d<T>::collect(TensorRegistry<T>& reg, const std::string& prefix) {
  reg.params.push_back({prefix + "weight", &gamma, &gamma_grad});
  reg.params.push_back({prefix + "bias", &beta, &beta_grad});
  reg.buffers.push_back({prefix + "running_mean", &running_mean, nullptr});
  reg.buffers.push_back({prefix + "running_var", &running_var, nullptr});
}

// ------------------------------------------------------------------ ReLU

template <typename T>
Tensor<T> ReLU<T>::forward(Tensor<T> x, bool keep) {
  for (T& v : x.data) v = v > T{} ? v : T{};
  if (keep) output_ = x;
  return x;
}

template <typename T>
Tensor<T> ReLU<T>::backward(Tensor<T> grad_out) const {
  if (!output_.same_shape(grad_out)) throw Error(ErrorCode::kInternal, "relu backward without cached forward");
  for (std::size_t i = 0; i < grad_out.data.size(); ++i)
    if (!(output_.data[i] > T{})) grad_out.data[i] = T{};
  return grad_out;
}

// ------------------------------------------------------------- MaxPool2d

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, bool keep) {
  const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
  const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
  Tensor<T> y(x.n, x.c, oh, ow);
  std::vector<std::int32_t> arg(keep ? y.size() : 0);
  std::size_t o = 0;
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T* plane = x.data.data() + (static_cast<std::size_t>(n) * x.c + c) * x.plane();
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::int32_t best_i = -1;
          for (int ki = 0; ki < k_; ++ki) {
            const int iy = yy * stride_ - pad_ + ki;
            if (iy < 0 || iy >= x.h) continue;
            for (int kj = 0; kj < k_; ++kj) {
              const int ix = xx * stride_ - pad_ + kj;
              if (ix < 0 || ix >= x.w) continue;
              const T v = plane[iy * x.w + ix];
              if (v > best || best_i < 0) {
                best = v;
                best_i = iy * x.w + ix;
              }
            }
          }
          y.data[o] = best;
          if (keep) arg[o] = best_i;
        }
    }
  if (keep) {
    argmax_ = std::move(arg);
    in_n_ = x.n; in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out) const {
  if (argmax_.size() != grad_out.size()) throw Error(ErrorCode::kInternal, "maxpool backward without cached forward");
  Tensor<T> gx(in_n_, in_c_, in_h_, in_w_);
  const std::size_t out_plane = grad_out.plane();
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    const std::size_t nc = o / out_plane;
    gx.data[nc * gx.plane() + argmax_[o]] += grad_out.data[o];
  }
  return gx;
}

// ------------------------------------------------------------ GlobalPool

template <typename T>
Tensor<T> GlobalPool<T>::forward(const Tensor<T>& x, bool keep) {
  Tensor<T> y(x.n, x.c, 1, 1);
  const std::size_t hw = x.plane();
  std::vector<std::int32_t> arg(keep && kind_ == PoolKind::kMax ? y.size() : 0);
  for (std::size_t nc = 0; nc < y.size(); ++nc) {
    const T* p = x.data.data() + nc * hw;
    if (kind_ == PoolKind::kMax) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < hw; ++i)
        if (p[i] > p[best]) best = i;
      y.data[nc] = p[best];
      if (keep) arg[nc] = static_cast<std::int32_t>(best);
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
      y.data[nc] = static_cast<T>(s / hw);
    }
  }
  if (keep) {
    argmax_ = std::move(arg);
    in_n_ = x.n; in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
  }
  return y;
}

template <typename T>
Tensor<T> GlobalPool<T>::backward(const Tensor<T>& grad_out) const {
  Tensor<T> gx(in_n_, in_c_, in_h_, in_w_);
  const std::size_t hw = gx.plane();
  if (grad_out.size() != static_cast<std::size_t>(in_n_) * in_c_) {
    throw Error(ErrorCode::kInternal, "global pool backward without cached forward");
  }
  for (std::size_t nc = 0; nc < grad_out.size(); ++nc) {
    if (kind_ == PoolKind::kMax) {
      gx.data[nc * hw + argmax_[nc]] = grad_out.data[nc];
    } else {
      const T g = grad_out.data[nc] / static_cast<T>(hw);
      std::fill_n(gx.data.data() + nc * hw, hw, g);
    }
  }
  return gx;
}

// --------------------------------------------------------------- Dropout

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode, std::mt19937_64& rng, bool keep) {
  active_ = mode == Mode::kTrain && rate_ > 0.0;
  if (!active_) return x;
  std::bernoulli_distribution keep_dist(1.0 - rate_);
  const T scale = static_cast<T>(1.0 / (1.0 - rate_));
  Tensor<T> y = x;
  AlignedVector<T> mask(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = keep_dist(rng) ? scale : T{};
    y.data[i] *= mask[i];
  }
  if (keep) mask_ = std::move(mask);
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out) const {
  if (!active_) return grad_out;
  Tensor<T> gx = grad_out;
  for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] *= mask_[i];
  return gx;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(int in_features, int out_features)
    : weight(1, 1, in_features, out_features), bias(1, out_features, 1, 1),
      weight_grad(1, 1, in_features, out_features), bias_grad(1, out_features, 1, 1),
      in_(in_features), out_(out_features) {}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, bool keep) {
  if (static_cast<int>(x.sample_stride()) != in_) {
    throw InvalidArgument("linear: expected " + std::to_string(in_) + " features, got " + x.shape_string());
  }
  Tensor<T> y(x.n, out_, 1, 1);
  MapR<T> y_mat(y.data.data(), x.n, out_);
  y_mat.noalias() = CMapR<T>(x.data.data(), x.n, in_) * CMapR<T>(weight.data.data(), in_, out_);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_; ++o) y_mat(n, o) += bias.data[o];
  if (keep) input_ = x;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
  const int batch = grad_out.n;
  if (input_.n != batch) throw Error(ErrorCode::kInternal, "linear backward without cached forward");
  CMapR<T> gy(grad_out.data.data(), batch, out_);
  CMapR<T> x(input_.data.data(), batch, in_);
  MapR<T>(weight_grad.data.data(), in_, out_).noalias() += x.transpose() * gy;
  for (int o = 0; o < out_; ++o) bias_grad.data[o] += gy.col(o).sum();
  Tensor<T> gx(input_.n, input_.c, input_.h, input_.w);
  MapR<T>(gx.data.data(), batch, in_).noalias() = gy * CMapR<T>(weight.data.data(), in_, out_).transpose();
  return gx;
}

template <typename T>
void Linear<T>::collect(TensorRegistry<T>& reg, const std::string& weight_name, const std::string& bias_name) {
  reg.params.push_back({weight_name, &weight, &weight_grad});
  reg.params.push_back({bias_name, &bias, &bias_grad});
}

#define BIRDXFER_INSTANTIATE(T)                                             \
  template class Conv2d<T>;                                                 \
  template class BatchNorm2d<T>;                                            \
  template class ReLU<T>;                                                   \
  template class MaxPool2d<T>;                                              \
  template class GlobalPool<T>;                                             \
  template class Dropout<T>;                                                \
  template class Linear<T>;                                                 \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                          \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);               \
  template void fill_uniform<T>(Tensor<T>&, double, std::mt19937_64&);

BIRDXFER_INSTANTIATE(float)
BIRDXFER_INSTANTIATE(double)

}  // namespace birdxfer::nn
