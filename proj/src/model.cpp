#include "birdxfer/model.hpp"

#include <cstring>

#include "birdxfer/checkpoint.hpp"
#include "birdxfer/error.hpp"
#include "birdxfer/random.hpp"

namespace birdxfer {

void ModelConfig::validate() const {
  if (num_classes < 2) throw ConfigError("model.num_classes must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
  if (backbone.width < 1) throw ConfigError("model.backbone_width must be positive");
  for (int b : backbone.blocks)
    if (b < 1) throw ConfigError("model.backbone_blocks entries must be positive");
}

template <typename T>
Tensor<T> gray_to_rgb(const Tensor<T>& batch, std::span<const T, 3> weights, std::span<const T, 3> biases) {
  if (batch.c != 1) throw InvalidArgument("gray_to_rgb: expected 1 channel, got " + batch.shape_string());
  Tensor<T> out(batch.n, 3, batch.h, batch.w);
  const std::size_t hw = batch.plane();
  for (int n = 0; n < batch.n; ++n) {
    const T* src = batch.sample(n);
    for (int c = 0; c < 3; ++c) {
      T* dst = out.sample(n) + c * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] = weights[c] * src[i] + biases[c];
    }
  }
  return out;
}

template <typename T>
Network<T>::Network(const ModelConfig& config, std::unique_ptr<nn::FeatureExtractor<T>> backbone)
    : config_(config),
      conversion_(1, 3, 1, 1, 0, true),
      backbone_(std::move(backbone)),
      pool_(config.pooling),
      dropout_(config.dropout),
      head_(backbone_->out_channels(), config.num_classes) {}

template <typename T>
Network<T>::Network(const Network& other)
    : config_(other.config_),
      conversion_(other.conversion_),
      backbone_(other.backbone_->clone()),
      pool_(other.pool_),
      dropout_(other.dropout_),
      head_(other.head_),
      dropout_rng_(other.dropout_rng_) {}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode, bool keep) {
  if (batch.c != 1) throw InvalidArgument("network expects N x 1 x H x W input, got " + batch.shape_string());
  auto rgb = conversion_.forward(batch, keep);
  auto features = backbone_->forward(rgb, mode, keep);
  auto pooled = pool_.forward(features, keep);
  auto dropped = dropout_.forward(pooled, mode, dropout_rng_, keep);
  auto logits = head_.forward(dropped, keep);
  auto scores = nn::sigmoid(logits);
  if (keep) logits_ = std::move(logits);
  return scores;
}

template <typename T>
void Network<T>::backward_from_logits(const Tensor<T>& grad_logits) {
  auto g = head_.backward(grad_logits);
  g = dropout_.backward(g);
  g = pool_.backward(g);
  g = backbone_->backward(g);
  conversion_.backward(g, /*need_input_grad=*/false);
}

template <typename T>
Tensor<T> Network<T>::feature_map(const Tensor<T>& batch, Mode mode) {
  return backbone_->forward(conversion_.forward(batch, false), mode, false);
}

template <typename T>
Tensor<T> Network<T>::pooled_features(const Tensor<T>& batch, Mode mode) {
  return pool_.forward(feature_map(batch, mode), false);
}

template <typename T>
Tensor<T> Network<T>::head_from_feature_map(const Tensor<T>& feature_map) {
  return nn::sigmoid(head_.forward(pool_.forward(feature_map, false), false));
}

template <typename T>
nn::TensorRegistry<T> Network<T>::registry() {
  nn::TensorRegistry<T> reg;
  conversion_.collect(reg, "conversion.w", "conversion.b");
  nn::TensorRegistry<T> inner;
  backbone_->collect(inner);
  for (auto& p : inner.params) reg.params.push_back({"backbone." + p.name, p.value, p.grad});
  for (auto& b : inner.buffers) reg.buffers.push_back({"backbone." + b.name, b.value, nullptr});
  head_.collect(reg, "head.w", "head.b");
  return reg;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : registry().params) p.grad->zero();
}

double head_init_bound(int in_features, int num_classes) {
  return nn::glorot_bound(in_features, num_classes);
}

double conversion_init_bound() { return nn::glorot_bound(1.0, 3.0); }

template <typename T>
void Network<T>::replace_head(int new_num_classes, std::uint64_t seed) {
  if (new_num_classes < 2) throw InvalidArgument("replace_head: need at least 2 classes");
  config_.num_classes = new_num_classes;
  head_ = nn::Linear<T>(backbone_->out_channels(), new_num_classes);
  std::mt19937_64 rng(mix_seed({seed, 0x68656164ull}));
  nn::fill_uniform(head_.weight, head_init_bound(backbone_->out_channels(), new_num_classes), rng);
  logits_ = {};
}

template <typename T>
Network<T> build_model(const ModelConfig& config, const std::optional<std::filesystem::path>& pretrained_path,
                       std::uint64_t seed, InitInfo* info) {
  config.validate();
  Network<T> net(config, std::make_unique<nn::ResNetBackbone<T>>(config.backbone));
  std::mt19937_64 rng(mix_seed({seed, 0x696e6974ull}));
  nn::fill_uniform(net.conversion().weight, conversion_init_bound(), rng);
  net.conversion().bias.zero();
  net.replace_head(config.num_classes, seed);
  net.set_dropout_seed(mix_seed({seed, 0x64726f70ull}));

  auto reg = net.registry();
  if (pretrained_path) {
    load_backbone_weights(net, *pretrained_path);
  } else {
    for (auto& p : reg.params) {
      if (!p.name.starts_with("backbone.") || (p.value->n == 1 && p.value->h == 1 && p.value->w == 1)) continue;
      // Convolution kernels only; batch-norm affine terms keep 1 / 0.
      const double receptive = static_cast<double>(p.value->h) * p.value->w;
      nn::fill_uniform(*p.value, nn::glorot_bound(p.value->c * receptive, p.value->n * receptive), rng);
    }
  }
  if (info) {
    info->scheme = "glorot_uniform";
    info->conversion_bound = conversion_init_bound();
    info->head_bound = head_init_bound(net.backbone().out_channels(), config.num_classes);
    info->backbone_source = pretrained_path ? pretrained_path->string() : "random";
  }
  return net;
}

template <typename T>
std::uint64_t backbone_checksum(Network<T>& net) {
  std::uint64_t h = 1469598103934665603ull;
  auto reg = net.registry();
  auto mix = [&h](const std::string& name, const Tensor<T>& t) {
    for (unsigned char ch : name) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
    for (std::size_t i = 0; i < t.data.size() * sizeof(T); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (auto* list : {&reg.params, &reg.buffers})
    for (auto& e : *list)
      if (e.name.starts_with("backbone.") || e.name.starts_with("conversion.")) mix(e.name, *e.value);
  return h;
}

template class Network<float>;
template class Network<double>;
template Tensor<float> gray_to_rgb<float>(const Tensor<float>&, std::span<const float, 3>, std::span<const float, 3>);
template Tensor<double> gray_to_rgb<double>(const Tensor<double>&, std::span<const double, 3>, std::span<const double, 3>);
template Network<float> build_model<float>(const ModelConfig&, const std::optional<std::filesystem::path>&,
                                           std::uint64_t, InitInfo*);
template Network<double> build_model<double>(const ModelConfig&, const std::optional<std::filesystem::path>&,
                                             std::uint64_t, InitInfo*);
template std::uint64_t backbone_checksum<float>(Network<float>&);
template std::uint64_t backbone_checksum<double>(Network<double>&);

}  // namespace birdxfer
