#pragma once

#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "birdxfer/nn/layers.hpp"

namespace birdxfer::nn {

// Convolutional trunk that maps N x 3 x H x W images to a feature map.
template <typename T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode, bool keep) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  // Names are relative; the network prefixes them with "backbone.".
  virtual void collect(TensorRegistry<T>& reg) = 0;
  virtual int out_channels() const = 0;
  virtual std::unique_ptr<FeatureExtractor<T>> clone() const = 0;
};

// Bottleneck ResNet. width 64 with blocks {3, 4, 6, 3} is ResNet-50; smaller
// widths and block counts keep the same topology for desk-scale runs.
struct ResNetConfig {
  int width = 64;
  std::array<int, 4> blocks{3, 4, 6, 3};
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  int out_channels() const { return width * 8 * 4; }
  bool is_resnet50() const { return width == 64 && blocks == std::array<int, 4>{3, 4, 6, 3}; }
  friend bool operator==(const ResNetConfig&, const ResNetConfig&) = default;
};

template <typename T>
class Bottleneck {
 public:
  Bottleneck(int in_channels, int planes, int stride, const ResNetConfig& config);

  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool keep);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(TensorRegistry<T>& reg, const std::string& prefix);

 private:
  Conv2d<T> conv1_, conv2_, conv3_;
  BatchNorm2d<T> bn1_, bn2_, bn3_;
  ReLU<T> relu1_, relu2_, relu_out_;
  bool has_downsample_ = false;
  Conv2d<T> down_conv_;
  BatchNorm2d<T> down_bn_;
};

// Stem (7x7/2 conv, BN, ReLU, 3x3/2 max pool) followed by four bottleneck
// stages with strides 1, 2, 2, 2. Parameter names follow torchvision
// (conv1.weight, layer2.0.downsample.1.running_var, ...).
template <typename T>
class ResNetBackbone final : public FeatureExtractor<T> {
 public:
  explicit ResNetBackbone(const ResNetConfig& config);

  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool keep) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void collect(TensorRegistry<T>& reg) override;
  int out_channels() const override { return config_.out_channels(); }
  std::unique_ptr<FeatureExtractor<T>> clone() const override {
    return std::make_unique<ResNetBackbone<T>>(*this);
  }
  const ResNetConfig& config() const { return config_; }

 private:
  ResNetConfig config_;
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  ReLU<T> relu_;
  MaxPool2d<T> pool_;
  std::array<std::vector<Bottleneck<T>>, 4> stages_;
};

}  // namespace birdxfer::nn
