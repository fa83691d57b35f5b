#include "birdxfer/nn/resnet.hpp"

#include "birdxfer/error.hpp"

namespace birdxfer::nn {

template <typename T>
Bottleneck<T>::Bottleneck(int in_channels, int planes, int stride, const ResNetConfig& config)
    : conv1_(in_channels, planes, 1, 1, 0, false),
      conv2_(planes, planes, 3, stride, 1, false),
      conv3_(planes, planes * 4, 1, 1, 0, false),
      bn1_(planes, config.bn_eps, config.bn_momentum),
      bn2_(planes, config.bn_eps, config.bn_momentum),
      bn3_(planes * 4, config.bn_eps, config.bn_momentum) {
  if (stride != 1 || in_channels != planes * 4) {
    has_downsample_ = true;
    down_conv_ = Conv2d<T>(in_channels, planes * 4, 1, stride, 0, false);
    down_bn_ = BatchNorm2d<T>(planes * 4, config.bn_eps, config.bn_momentum);
  }
}

template <typename T>
Tensor<T> Bottleneck<T>::forward(const Tensor<T>& x, Mode mode, bool keep) {
  auto out = relu1_.forward(bn1_.forward(conv1_.forward(x, keep), mode, keep), keep);
  out = relu2_.forward(bn2_.forward(conv2_.forward(out, keep), mode, keep), keep);
  out = bn3_.forward(conv3_.forward(out, keep), mode, keep);
  if (has_downsample_) {
    add_inplace(out, down_bn_.forward(down_conv_.forward(x, keep), mode, keep));
  } else {
    add_inplace(out, x);
  }
  return relu_out_.forward(std::move(out), keep);
}

template <typename T>
Tensor<T> Bottleneck<T>::backward(const Tensor<T>& grad_out) {
  const auto g = relu_out_.backward(grad_out);
  auto gx = conv3_.backward(bn3_.backward(g));
  gx = conv2_.backward(bn2_.backward(relu2_.backward(std::move(gx))));
  gx = conv1_.backward(bn1_.backward(relu1_.backward(std::move(gx))));
  if (has_downsample_) {
    add_inplace(gx, down_conv_.backward(down_bn_.backward(g)));
  } else {
    add_inplace(gx, g);
  }
  return gx;
}

template <typename T>
void Bottleneck<T>::collect(TensorRegistry<T>& reg, const std::string& prefix) {
  conv1_.collect(reg, prefix + "conv1.weight", "");
  bn1_.collect(reg, prefix + "bn1.");
  conv2_.collect(reg, prefix + "conv2.weight", "");
  bn2_.collect(reg, prefix + "bn2.");
  conv3_.collect(reg, prefix + "conv3.weight", "");
  bn3_.collect(reg, prefix + "bn3.");
  if (has_downsample_) {
    down_conv_.collect(reg, prefix + "downsample.0.weight", "");
    down_bn_.collect(reg, prefix + "downsample.1.");
  }
}

template <typename T>
ResNetBackbone<T>::ResNetBackbone(const ResNetConfig& config)
    : config_(config),
      conv1_(3, config.width, 7, 2, 3, false),
      bn1_(config.width, config.bn_eps, config.bn_momentum),
      pool_(3, 2, 1) {
  if (config.width < 1) throw InvalidArgument("resnet width must be positive");
  int in = config.width;
  for (int s = 0; s < 4; ++s) {
    if (config.blocks[s] < 1) throw InvalidArgument("resnet stage needs at least one block");
    const int planes = config.width << s;
    for (int b = 0; b < config.blocks[s]; ++b) {
      stages_[s].emplace_back(in, planes, (b == 0 && s > 0) ? 2 : 1, config);
      in = planes * 4;
    }
  }
}

template <typename T>
Tensor<T> ResNetBackbone<T>::forward(const Tensor<T>& x, Mode mode, bool keep) {
  if (x.c != 3) throw InvalidArgument("backbone expects 3 channels, got " + x.shape_string());
  auto out = pool_.forward(relu_.forward(bn1_.forward(conv1_.forward(x, keep), mode, keep), keep), keep);
  for (auto& stage : stages_)
    for (auto& block : stage) out = block.forward(out, mode, keep);
  return out;
}

template <typename T>
Tensor<T> ResNetBackbone<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (int s = 3; s >= 0; --s)
    for (auto it = stages_[s].rbegin(); it != stages_[s].rend(); ++it) g = it->backward(g);
  g = pool_.backward(g);
  return conv1_.backward(bn1_.backward(relu_.backward(std::move(g))));
}

template <typename T>
void ResNetBackbone<T>::collect(TensorRegistry<T>& reg) {
  conv1_.collect(reg, "conv1.weight", "");
  bn1_.collect(reg, "bn1.");
  for (int s = 0; s < 4; ++s)
    for (std::size_t b = 0; b < stages_[s].size(); ++b)
      stages_[s][b].collect(reg, "layer" + std::to_string(s + 1) + "." + std::to_string(b) + ".");
}

template class Bottleneck<float>;
template class Bottleneck<double>;
template class ResNetBackbone<float>;
template class ResNetBackbone<double>;

}  // namespace birdxfer::nn
