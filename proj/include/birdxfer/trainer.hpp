#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "birdxfer/augment.hpp"
#include "birdxfer/checkpoint.hpp"
#include "birdxfer/dataset.hpp"
#include "birdxfer/model.hpp"

namespace birdxfer {

struct TrainingSchedule {
  double initial_lr = 1e-5;
  int batch_size = 8;
  int plateau_patience = 10;
  int abort_patience = 32;
  int restarts = 3;
  double restart_lr_scale = 0.9;
  double lr_decay = 0.5;
  double weight_decay = 1e-5;
  int max_epochs = 300;  // per cycle
  double min_delta = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double bce_epsilon = 1e-7;

  void validate() const;
};

enum class ScheduleAction { kContinue, kHalveLr, kAbortCycle };
const char* to_string(ScheduleAction action);

struct TrainState {
  int epoch = 0;  // epochs completed over the whole run
  double lr = 0.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int epochs_since_improvement = 0;
  int restart_index = 0;
  int halvings = 0;  // within the current cycle
  std::uint64_t seed = 0;
};

struct ScheduleStep {
  ScheduleAction action = ScheduleAction::kContinue;
  bool improved = false;
  std::string diagnostic;
};

// initial_lr * restart_lr_scale^restart_index * lr_decay^halvings
double cycle_lr(const TrainingSchedule& schedule, int restart_index, int halvings);
TrainState initial_state(const TrainingSchedule& schedule, std::uint64_t seed);

// Plateau / abort state machine, applied once per epoch. Improvement means
// val_loss < best - min_delta and resets the counter. Without improvement the
// counter grows; reaching abort_patience aborts the cycle, otherwise every
// multiple of plateau_patience halves the learning rate. Halving does not
// reset the counter. A non-finite loss aborts with a diagnostic.
ScheduleStep lr_schedule_step(TrainState& state, double val_loss, const TrainingSchedule& schedule);

// Starts the next cycle: restart_index + 1, counters cleared, lr rescaled.
void begin_restart(TrainState& state, const TrainingSchedule& schedule);

std::vector<float> encode_targets(const SampleRecord& record, int num_classes);

// mean over batch and classes of w_c * BCE(s, t), scores clamped to [eps, 1 - eps].
double weighted_bce(const Tensor<float>& scores, const Tensor<float>& targets, std::span<const double> weights,
                    double epsilon = 1e-7);
// d loss / d logits = w_c (s - t) / (B C), the exact derivative of the
// unclamped loss composed with the sigmoid.
Tensor<float> weighted_bce_logit_grad(const Tensor<float>& scores, const Tensor<float>& targets,
                                      std::span<const double> weights);

// Adam with L2 weight decay (g + decay * w) on the arrays it is told about.
class Adam {
 public:
  Adam(double beta1, double beta2, double epsilon, double weight_decay);
  void step(nn::TensorRegistry<float>& reg, double lr);
  void reset();
  static bool decays(const std::string& name) { return name == "conversion.w" || name == "head.w"; }

 private:
  double beta1_, beta2_, epsilon_, weight_decay_;
  long long t_ = 0;
  std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> moments_;
};

// PNG-backed spectrogram store shared by training, validation and testing.
class ImageStore {
 public:
  const GraySpectrogram& get(const std::string& path);

 private:
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<GraySpectrogram>> cache_;
};

struct EpochRecord {
  int epoch = 0;
  int cycle = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::size_t negatives = 0;
  std::size_t steps = 0;
  bool improved = false;
  std::string action;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::filesystem::path best_checkpoint;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int restarts_used = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  TrainingSchedule schedule{};

  std::vector<double> lr_trace() const;
  nlohmann::json to_json() const;
};

struct TrainData {
  std::vector<SampleRecord> train;             // positives
  std::vector<SampleRecord> validation;        // positives + validation negatives
  std::vector<SampleRecord> negative_pool;     // training negatives, sampled per epoch
  std::size_t negatives_per_epoch = 0;
};

struct TrainOptions {
  std::filesystem::path checkpoint_path;  // best checkpoint, rewritten on every improvement
  CheckpointMetadata metadata;            // class names etc. for the saved checkpoint
  AugmentConfig augment{};
  std::uint64_t seed = 0;
  std::ostream* progress = nullptr;       // one line per epoch
  std::string config_hash;
};

struct ViewScores {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Eval-mode loss/accuracy over validation views seeded by (seed, epoch, index).
ViewScores evaluate_validation(Network<float>& net, std::span<const SampleRecord> records, ImageStore& images,
                               const AugmentConfig& augment, std::span<const double> weights, std::uint64_t seed,
                               int epoch, int batch_size, double bce_epsilon);

TrainReport train(Network<float>& net, const TrainData& data, const TrainingSchedule& schedule,
                  const TrainOptions& options, ImageStore& images);

}  // namespace birdxfer
