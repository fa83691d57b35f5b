#include "birdxfer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>

#include "birdxfer/error.hpp"
#include "birdxfer/png_io.hpp"
#include "birdxfer/random.hpp"

namespace birdxfer {

void TrainingSchedule::validate() const {
  if (!(initial_lr > 0.0)) throw ConfigError("schedule.initial_lr must be positive");
  if (batch_size < 1) throw ConfigError("schedule.batch_size must be >= 1");
  if (plateau_patience < 1 || abort_patience < 1) throw ConfigError("schedule patience values must be >= 1");
  if (plateau_patience >= abort_patience) throw ConfigError("schedule.plateau_patience must be < abort_patience");
  if (!(restart_lr_scale > 0.0 && restart_lr_scale < 1.0)) throw ConfigError("schedule.restart_lr_scale must be in (0, 1)");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw ConfigError("schedule.lr_decay must be in (0, 1)");
  if (restarts < 0) throw ConfigError("schedule.restarts must be >= 0");
  if (max_epochs < 1) throw ConfigError("schedule.max_epochs must be >= 1");
  if (weight_decay < 0.0 || min_delta < 0.0) throw ConfigError("schedule.weight_decay/min_delta must be >= 0");
}

const char* to_string(ScheduleAction action) {
  switch (action) {
    case ScheduleAction::kContinue: return "continue";
    case ScheduleAction::kHalveLr: return "halve_lr";
    case ScheduleAction::kAbortCycle: return "abort_cycle";
  }
  return "?";
}

double cycle_lr(const TrainingSchedule& schedule, int restart_index, int halvings) {
  return schedule.initial_lr * std::pow(schedule.restart_lr_scale, restart_index) *
         std::pow(schedule.lr_decay, halvings);
}

TrainState initial_state(const TrainingSchedule& schedule, std::uint64_t seed) {
  TrainState s;
  s.lr = cycle_lr(schedule, 0, 0);
  s.seed = seed;
  return s;
}

ScheduleStep lr_schedule_step(TrainState& state, double val_loss, const TrainingSchedule& schedule) {
  ScheduleStep step;
  if (!std::isfinite(val_loss)) {
    step.action = ScheduleAction::kAbortCycle;
    step.diagnostic = "non-finite validation loss";
    return step;
  }
  if (val_loss < state.best_val_loss - schedule.min_delta) {
    state.best_val_loss = val_loss;
    state.best_epoch = state.epoch;
    state.epochs_since_improvement = 0;
    step.improved = true;
    return step;
  }
  ++state.epochs_since_improvement;
  if (state.epochs_since_improvement >= schedule.abort_patience) {
    step.action = ScheduleAction::kAbortCycle;
    step.diagnostic = "no improvement for " + std::to_string(state.epochs_since_improvement) + " epochs";
  } else if (state.epochs_since_improvement % schedule.plateau_patience == 0) {
    ++state.halvings;
    state.lr = cycle_lr(schedule, state.restart_index, state.halvings);
    step.action = ScheduleAction::kHalveLr;
  }
  return step;
}

void begin_restart(TrainState& state, const TrainingSchedule& schedule) {
  ++state.restart_index;
  state.halvings = 0;
  state.epochs_since_improvement = 0;
  state.lr = cycle_lr(schedule, state.restart_index, 0);
}

std::vector<float> encode_targets(const SampleRecord& record, int num_classes) {
  if (record.label_index < 0 || record.label_index >= num_classes) {
    throw InvalidArgument("encode_targets: label " + std::to_string(record.label_index) + " outside [0, " +
                          std::to_string(num_classes) + ")");
  }
  std::vector<float> t(static_cast<std::size_t>(num_classes), 0.0f);
  t[static_cast<std::size_t>(record.label_index)] = 1.0f;
  return t;
}

double weighted_bce(const Tensor<float>& scores, const Tensor<float>& targets, std::span<const double> weights,
                    double epsilon) {
  if (!scores.same_shape(targets)) throw InvalidArgument("weighted_bce: shape mismatch");
  const int classes = scores.c;
  if (static_cast<int>(weights.size()) != classes) throw InvalidArgument("weighted_bce: weight count mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw InvalidArgument("weighted_bce: weights must be positive");
  if (scores.n == 0) throw InvalidArgument("weighted_bce: empty batch");
  double total = 0.0;
  for (int b = 0; b < scores.n; ++b) {
    for (int c = 0; c < classes; ++c) {
      const std::size_t i = static_cast<std::size_t>(b) * classes + c;
      const double s = std::clamp(static_cast<double>(scores.data[i]), epsilon, 1.0 - epsilon);
      const double t = targets.data[i];
      total += weights[c] * (-t * std::log(s) - (1.0 - t) * std::log(1.0 - s));
    }
  }
  return total / (static_cast<double>(scores.n) * classes);
}

Tensor<float> weighted_bce_logit_grad(const Tensor<float>& scores, const Tensor<float>& targets,
                                      std::span<const double> weights) {
  if (!scores.same_shape(targets)) throw InvalidArgument("weighted_bce: shape mismatch");
  Tensor<float> grad = nn::zeros_like(scores);
  const int classes = scores.c;
  const double norm = 1.0 / (static_cast<double>(scores.n) * classes);
  for (int b = 0; b < scores.n; ++b)
    for (int c = 0; c < classes; ++c) {
      const std::size_t i = static_cast<std::size_t>(b) * classes + c;
      grad.data[i] = static_cast<float>(weights[c] * (scores.data[i] - targets.data[i]) * norm);
    }
  return grad;
}

Adam::Adam(double beta1, double beta2, double epsilon, double weight_decay)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), weight_decay_(weight_decay) {}

void Adam::reset() {
  t_ = 0;
  moments_.clear();
}

void Adam::step(nn::TensorRegistry<float>& reg, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& p : reg.params) {
    auto& [m, v] = moments_[p.name];
    const std::size_t n = p.value->size();
    if (m.size() != n) {
      m.assign(n, 0.0f);
      v.assign(n, 0.0f);
    }
    const bool decay = weight_decay_ > 0.0 && decays(p.name);
    float* w = p.value->data.data();
    const float* g = p.grad->data.data();
    for (std::size_t i = 0; i < n; ++i) {
      double grad = g[i];
      if (decay) grad += weight_decay_ * w[i];
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * grad);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * grad * grad);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] = static_cast<float>(w[i] - lr * mhat / (std::sqrt(vhat) + epsilon_));
    }
  }
}

const GraySpectrogram& ImageStore::get(const std::string& path) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(path);
  if (it == cache_.end()) {
    auto image = std::make_unique<GraySpectrogram>(load_spectrogram_png(path));
    it = cache_.emplace(path, std::move(image)).first;
  }
  return *it->second;
}

std::vector<double> TrainReport::lr_trace() const {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(e.lr);
  return out;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["best_checkpoint"] = best_checkpoint.string();
  j["best_val_loss"] = best_val_loss;
  j["best_epoch"] = best_epoch;
  j["restarts_used"] = restarts_used;
  j["optimizer"] = {{"name", "adam"},
                    {"beta1", schedule.adam_beta1},
                    {"beta2", schedule.adam_beta2},
                    {"epsilon", schedule.adam_epsilon},
                    {"weight_decay", schedule.weight_decay},
                    {"weight_decay_applies_to", {"conversion.w", "head.w"}}};
  j["lr_trace"] = lr_trace();
  auto epochs_json = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"cycle", e.cycle},
                           {"lr", e.lr},
                           {"train_loss", e.train_loss},
                           {"train_accuracy", e.train_accuracy},
                           {"val_loss", e.val_loss},
                           {"val_accuracy", e.val_accuracy},
                           {"negatives", e.negatives},
                           {"steps", e.steps},
                           {"improved", e.improved},
                           {"action", e.action}});
  }
  j["epochs"] = std::move(epochs_json);
  return nlohmann::json::parse(j.dump());
}

namespace {

int argmax(const float* scores, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

}  // namespace

ViewScores evaluate_validation(Network<float>& net, std::span<const SampleRecord> records, ImageStore& images,
                               const AugmentConfig& augment, std::span<const double> weights, std::uint64_t seed,
                               int epoch, int batch_size, double bce_epsilon) {
  ViewScores out;
  if (records.empty()) return out;
  const int classes = net.num_classes();
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<FloatImage> views;
    Tensor<float> targets(static_cast<int>(end - start), classes, 1, 1);
    for (std::size_t i = start; i < end; ++i) {
      Rng rng(mix_seed({seed, static_cast<std::uint64_t>(epoch), i, 0x76616cull}));
      views.push_back(validation_view(images.get(records[i].image_path), rng, augment));
      const auto t = encode_targets(records[i], classes);
      std::copy(t.begin(), t.end(), targets.sample(static_cast<int>(i - start)));
    }
    const auto scores = net.forward(stack_views<float>(std::span<const FloatImage>(views)), Mode::kEval);
    loss_sum += weighted_bce(scores, targets, weights, bce_epsilon) * static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      if (argmax(scores.sample(static_cast<int>(i - start)), classes) == records[i].label_index) ++correct;
    }
  }
  out.loss = loss_sum / static_cast<double>(records.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  return out;
}

TrainReport train(Network<float>& net, const TrainData& data, const TrainingSchedule& schedule,
                  const TrainOptions& options, ImageStore& images) {
  schedule.validate();
  options.augment.validate();
  if (data.train.empty() || data.validation.empty()) throw ValidationError("train: empty training or validation split");
  const int classes = net.num_classes();

  TrainReport report;
  report.seed = options.seed;
  report.schedule = schedule;
  report.config_hash = options.config_hash;
  report.best_checkpoint = options.checkpoint_path;

  TrainState state = initial_state(schedule, options.seed);
  Adam adam(schedule.adam_beta1, schedule.adam_beta2, schedule.adam_epsilon, schedule.weight_decay);
  net.set_dropout_seed(mix_seed({options.seed, 0x64726f70ull}));
  std::optional<Network<float>> best_net;
  int cycle_epoch = 0;

  while (true) {
    const int epoch = state.epoch;
    auto negatives = sample_negatives(data.negative_pool, data.negatives_per_epoch, options.seed,
                                      static_cast<std::uint64_t>(epoch));
    std::vector<SampleRecord> records = data.train;
    records.insert(records.end(), negatives.begin(), negatives.end());
    const auto weights = class_weights(records, classes);

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed({options.seed, static_cast<std::uint64_t>(epoch), 0x73687566ull}));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    const double lr = state.lr;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(schedule.batch_size));
      std::vector<FloatImage> views;
      Tensor<float> targets(static_cast<int>(end - start), classes, 1, 1);
      for (std::size_t i = start; i < end; ++i) {
        const auto& rec = records[order[i]];
        Rng rng(mix_seed({options.seed, static_cast<std::uint64_t>(epoch), i, 0x7472616eull}));
        views.push_back(training_view(images.get(rec.image_path), rng, options.augment));
        const auto t = encode_targets(rec, classes);
        std::copy(t.begin(), t.end(), targets.sample(static_cast<int>(i - start)));
      }
      const auto batch = stack_views<float>(std::span<const FloatImage>(views));
      const auto scores = net.forward(batch, Mode::kTrain, /*keep=*/true);
      const double loss = weighted_bce(scores, targets, weights, schedule.bce_epsilon);
      if (!std::isfinite(loss)) throw NumericError("divergent training loss at epoch " + std::to_string(epoch));
      net.zero_grad();
      net.backward_from_logits(weighted_bce_logit_grad(scores, targets, weights));
      auto reg = net.registry();
      adam.step(reg, lr);
      ++steps;
      loss_sum += loss * static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        if (argmax(scores.sample(static_cast<int>(i - start)), classes) == records[order[i]].label_index) ++correct;
      }
    }

    const auto val = evaluate_validation(net, data.validation, images, options.augment, weights, options.seed, epoch,
                                         schedule.batch_size, schedule.bce_epsilon);
    const auto step = lr_schedule_step(state, val.loss, schedule);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.cycle = state.restart_index;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(records.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
    rec.val_loss = val.loss;
    rec.val_accuracy = val.accuracy;
    rec.negatives = negatives.size();
    rec.steps = steps;
    rec.improved = step.improved;
    rec.action = to_string(step.action);
    report.epochs.push_back(rec);

    if (options.progress) {
      char line[256];
      std::snprintf(line, sizeof line, "epoch=%d lr=%.6g train_loss=%.6f val_loss=%.6f val_acc=%.4f", epoch, lr,
                    rec.train_loss, rec.val_loss, rec.val_accuracy);
      *options.progress << line << std::endl;
    }
    if (!step.diagnostic.empty() && step.action == ScheduleAction::kAbortCycle && !std::isfinite(val.loss)) {
      throw NumericError("divergent validation loss: " + step.diagnostic);
    }

    if (step.improved) {
      report.best_val_loss = state.best_val_loss;
      report.best_epoch = state.best_epoch;
      best_net = net;
      if (!options.checkpoint_path.empty()) {
        CheckpointMetadata meta = options.metadata;
        meta.extra["best_epoch"] = state.best_epoch;
        meta.extra["best_val_loss"] = state.best_val_loss;
        meta.extra["train_seed"] = options.seed;
        save_checkpoint(net, meta, options.checkpoint_path);
      }
    }

    ++state.epoch;
    ++cycle_epoch;
    if (step.action == ScheduleAction::kAbortCycle) {
      if (state.restart_index >= schedule.restarts || !best_net) break;
      net = *best_net;
      net.set_dropout_seed(mix_seed({options.seed, 0x64726f70ull, static_cast<std::uint64_t>(state.epoch)}));
      adam.reset();
      begin_restart(state, schedule);
      ++report.restarts_used;
      cycle_epoch = 0;
      continue;
    }
    if (cycle_epoch >= schedule.max_epochs) break;
  }
  if (best_net) net = std::move(*best_net);
  return report;
}

}  // namespace birdxfer
