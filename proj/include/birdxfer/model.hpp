#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "birdxfer/nn/resnet.hpp"

namespace birdxfer {

using nn::Mode;
using nn::PoolKind;
using nn::Tensor;

struct ModelConfig {
  int num_classes = 47;
  nn::ResNetConfig backbone{};
  PoolKind pooling = PoolKind::kMax;
  double dropout = 0.5;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// out[:, c] = weights[c] * in[:, 0] + biases[c] for c in {0, 1, 2}.
template <typename T>
Tensor<T> gray_to_rgb(const Tensor<T>& batch, std::span<const T, 3> weights, std::span<const T, 3> biases);

// Gray -> RGB 1x1 convolution, feature extractor, global pooling, dropout and
// a sigmoid-activated fully connected head.
template <typename T>
class Network {
 public:
  Network(const ModelConfig& config, std::unique_ptr<nn::FeatureExtractor<T>> backbone);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // N x 1 x H x W in [0, 1] -> N x num_classes x 1 x 1 sigmoid scores.
  Tensor<T> forward(const Tensor<T>& batch, Mode mode, bool keep = false);
  // Pre-sigmoid outputs of the last forward with keep = true.
  const Tensor<T>& last_logits() const { return logits_; }
  // Propagates dL/dlogits through the whole network, accumulating gradients.
  void backward_from_logits(const Tensor<T>& grad_logits);

  // Conversion + backbone only (pre-pool feature map).
  Tensor<T> feature_map(const Tensor<T>& batch, Mode mode);
  Tensor<T> pooled_features(const Tensor<T>& batch, Mode mode);
  // Pool + head on an externally supplied feature map, eval semantics.
  Tensor<T> head_from_feature_map(const Tensor<T>& feature_map);

  // Fully qualified names: conversion.w, conversion.b, backbone.*, head.w, head.b.
  nn::TensorRegistry<T> registry();
  void zero_grad();

  // Fresh uniform-initialized head with new_num_classes outputs.
  void replace_head(int new_num_classes, std::uint64_t seed);
  void set_dropout_seed(std::uint64_t seed) { dropout_rng_.seed(seed); }

  int num_classes() const { return config_.num_classes; }
  const ModelConfig& config() const { return config_; }
  nn::Conv2d<T>& conversion() { return conversion_; }
  nn::Linear<T>& head() { return head_; }
  nn::FeatureExtractor<T>& backbone() { return *backbone_; }

 private:
  ModelConfig config_;
  nn::Conv2d<T> conversion_;
  std::unique_ptr<nn::FeatureExtractor<T>> backbone_;
  nn::GlobalPool<T> pool_;
  nn::Dropout<T> dropout_;
  nn::Linear<T> head_;
  std::mt19937_64 dropout_rng_;
  Tensor<T> logits_;
};

struct InitInfo {
  std::string scheme = "glorot_uniform";
  double conversion_bound = 0.0;
  double head_bound = 0.0;
  std::string backbone_source = "random";
};

// Glorot-uniform initialisation of the conversion and head (zero biases).
// When pretrained_path is set, backbone.* arrays are loaded from that
// archive; otherwise the backbone uses the same uniform scheme.
template <typename T>
Network<T> build_model(const ModelConfig& config, const std::optional<std::filesystem::path>& pretrained_path,
                       std::uint64_t seed, InitInfo* info = nullptr);

double head_init_bound(int in_features, int num_classes);
double conversion_init_bound();

// FNV-1a over the raw bytes of every backbone.* and conversion.* array.
template <typename T>
std::uint64_t backbone_checksum(Network<T>& net);

// Converts a batch of unit-range views into an N x 1 x H x W tensor.
template <typename T, typename Image>
Tensor<T> stack_views(std::span<const Image> views) {
  if (views.empty()) return {};
  const int rows = views.front().rows();
  const int cols = views.front().cols();
  Tensor<T> batch(static_cast<int>(views.size()), 1, rows, cols);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& px = views[i].pixels.data;
    std::copy(px.begin(), px.end(), batch.sample(static_cast<int>(i)));
  }
  return batch;
}

}  // namespace birdxfer
