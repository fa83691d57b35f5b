#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "birdxfer/nn/tensor.hpp"

namespace birdxfer::nn {

// Layers cache what their backward pass needs only when forward is called
// with keep = true. backward() accumulates parameter gradients and returns
// the gradient with respect to the layer input.

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias);

  Tensor<T> forward(const Tensor<T>& x, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);
  void collect(TensorRegistry<T>& reg, const std::string& weight_name, const std::string& bias_name);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int output_size(int input) const { return (input + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> weight;  // out x in x k x k
  Tensor<T> bias;    // 1 x out x 1 x 1 (empty when disabled)
  Tensor<T> weight_grad;
  Tensor<T> bias_grad;

 private:
  bool pointwise() const { return k_ == 1 && stride_ == 1 && pad_ == 0; }

  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
  bool has_bias_ = false;
  Tensor<T> input_;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.1);

  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(TensorRegistry<T>& reg, const std::string& prefix);

  Tensor<T> gamma, beta, gamma_grad, beta_grad;
  Tensor<T> running_mean, running_var;

 private:
  int channels_ = 0;
  double eps_ = 1e-5;
  double momentum_ = 0.1;
  Mode cached_mode_ = Mode::kEval;
  Tensor<T> xhat_;
  AlignedVector<T> inv_std_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(Tensor<T> x, bool keep);
  Tensor<T> backward(Tensor<T> grad_out) const;

 private:
  Tensor<T> output_;
};

template <typename T>
class MaxPool2d {
 public:
  MaxPool2d(int kernel = 3, int stride = 2, int padding = 1) : k_(kernel), stride_(stride), pad_(padding) {}
  Tensor<T> forward(const Tensor<T>& x, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out) const;

 private:
  int k_, stride_, pad_;
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<std::int32_t> argmax_;
};

enum class PoolKind { kMax, kAverage };

// Spatial global pooling: N x C x H x W -> N x C x 1 x 1.
template <typename T>
class GlobalPool {
 public:
  explicit GlobalPool(PoolKind kind = PoolKind::kMax) : kind_(kind) {}
  Tensor<T> forward(const Tensor<T>& x, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out) const;
  PoolKind kind() const { return kind_; }

 private:
  PoolKind kind_;
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<std::int32_t> argmax_;
};

// Inverted dropout; identity in eval mode.
template <typename T>
class Dropout {
 public:
  explicit Dropout(double rate = 0.5) : rate_(rate) {}
  Tensor<T> forward(const Tensor<T>& x, Mode mode, std::mt19937_64& rng, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out) const;
  double rate() const { return rate_; }

 private:
  double rate_;
  bool active_ = false;
  AlignedVector<T> mask_;
};

// y = x W + b with W stored in x out (features x classes) layout.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features);

  Tensor<T> forward(const Tensor<T>& x, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(TensorRegistry<T>& reg, const std::string& weight_name, const std::string& bias_name);

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Tensor<T> weight;  // 1 x 1 x in x out
  Tensor<T> bias;    // 1 x out x 1 x 1
  Tensor<T> weight_grad, bias_grad;

 private:
  int in_ = 0, out_ = 0;
  Tensor<T> input_;
};

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& logits);

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src);

// Glorot-style uniform bound: sqrt(6 / (fan_in + fan_out)).
double glorot_bound(double fan_in, double fan_out);

template <typename T>
void fill_uniform(Tensor<T>& t, double bound, std::mt19937_64& rng);

}  // namespace birdxfer::nn
