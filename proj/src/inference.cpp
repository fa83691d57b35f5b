#include "birdxfer/inference.hpp"

#include <algorithm>
#include <span>
#include <string>

#include "birdxfer/error.hpp"

namespace birdxfer {

std::vector<int> window_origins(int cols, int size, int hop) {
  if (size < 1 || hop < 1) throw InvalidArgument("window_origins: size and hop must be positive");
  if (cols < 1) throw InvalidArgument("window_origins: empty image");
  std::vector<int> origins;
  if (cols <= size) return {0};
  for (int o = 0; o + size <= cols; o += hop) origins.push_back(o);
  if (origins.back() + size < cols) origins.push_back(cols - size);
  return origins;
}

WindowSet window_image(const GraySpectrogram& image, int size, int hop, int rows) {
  if (image.rows() != rows) {
    throw ValidationError("window_image: expected " + std::to_string(rows) + " rows, got " +
                          std::to_string(image.rows()));
  }
  WindowSet set;
  set.origins = window_origins(image.cols(), size, hop);
  const FloatImage full = to_float(image);
  for (int origin : set.origins) set.windows.push_back(crop_at(full, 0, origin, rows, size, PadMode::kWrap));
  return set;
}

std::vector<float> aggregate_max(const std::vector<std::vector<float>>& per_window) {
  if (per_window.empty()) throw InvalidArgument("aggregate_max: no windows");
  std::vector<float> out = per_window.front();
  for (const auto& row : per_window) {
    if (row.size() != out.size()) throw InvalidArgument("aggregate_max: ragged window scores");
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = std::max(out[c], row[c]);
  }
  return out;
}

Prediction predict_clip(Network<float>& net, const GraySpectrogram& image, int size, int hop) {
  auto set = window_image(image, size, hop, size);
  std::vector<FloatImage> views;
  views.reserve(set.windows.size());
  for (const auto& w : set.windows) views.push_back(minmax_normalize(w));

  Prediction pred;
  pred.window_origins = set.origins;
  const int classes = net.num_classes();
  // Small batches keep peak memory bounded on long clips.
  constexpr std::size_t kBatch = 8;
  for (std::size_t start = 0; start < views.size(); start += kBatch) {
    const std::size_t end = std::min(views.size(), start + kBatch);
    const auto scores =
        net.forward(stack_views<float>(std::span<const FloatImage>(views.data() + start, end - start)), Mode::kEval);
    for (std::size_t i = start; i < end; ++i) {
      const float* s = scores.sample(static_cast<int>(i - start));
      pred.per_window_scores.emplace_back(s, s + classes);
    }
  }
  pred.scores = aggregate_max(pred.per_window_scores);
  return pred;
}

int classify(const std::vector<float>& scores) {
  if (scores.empty()) throw InvalidArgument("classify: empty score vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::vector<int> classify_multi(const std::vector<float>& scores, double threshold, int negative_index) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("classify: threshold must be in (0, 1)");
  if (negative_index < 0 || negative_index >= static_cast<int>(scores.size())) {
    throw InvalidArgument("classify: negative index out of range");
  }
  std::vector<int> labels;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i)
    if (i != negative_index && scores[i] >= threshold) labels.push_back(i);
  if (labels.empty()) labels.push_back(negative_index);
  return labels;
}

}  // namespace birdxfer
