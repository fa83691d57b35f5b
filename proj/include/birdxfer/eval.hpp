#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "birdxfer/checkpoint.hpp"
#include "birdxfer/dataset.hpp"
#include "birdxfer/trainer.hpp"

namespace birdxfer {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths);

// rows = actual class, columns = predicted class.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::vector<long long>> counts;
  std::vector<std::vector<double>> normalized;  // row-normalized; empty until computed
  int fold_count = 1;

  long long total() const;
  long long trace() const;
  // Rows without samples stay all-zero.
  std::vector<std::vector<double>> row_normalized() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& truths,
                                 int num_classes);

// Mean of the row-normalized matrices.
ConfusionMatrix average_folds(const std::vector<ConfusionMatrix>& matrices);

// Sample standard deviation (n - 1); 0 for a single value.
double sample_std(const std::vector<double>& values);

void write_matrix_csv(const std::filesystem::path& path, const ConfusionMatrix& m,
                      const std::vector<std::string>& class_names);
// One square cell per entry, darker = larger normalized value.
void render_matrix_png(const std::filesystem::path& path, const ConfusionMatrix& m, int cell = 16);

// Train / validation / test records for one stage or fold, with negatives
// assigned: validation and test get a fixed draw of ratio x their positive
// count, the remainder forms the per-epoch training pool.
struct StagePartition {
  TrainData data;
  std::vector<SampleRecord> test;
  std::vector<SampleRecord> train_positives_all;  // for disjointness checks
};

StagePartition partition_stage(std::span<const SampleRecord> positives, std::span<const SampleRecord> negatives,
                               const SplitAssignment& assignment, double validation_negative_ratio,
                               std::size_t negatives_per_epoch, std::uint64_t seed, bool strict);

// Disjoint alternative to random resplits: positives are dealt per class into
// k parts; fold i tests on part i, validates on part i+1 and trains on the rest.
SplitAssignment disjoint_fold_assignment(std::span<const SampleRecord> records, int folds, int fold_index,
                                         std::uint64_t seed);

// Throws ValidationError if any test image also appears in train, the
// training negative pool or validation.
void assert_disjoint(const StagePartition& partition);

struct FoldResult {
  std::uint64_t seed = 0;
  std::size_t train_count = 0, validation_count = 0, test_count = 0;
  std::size_t train_negative_pool = 0, validation_negatives = 0, test_negatives = 0;
  double accuracy = 0.0;
  ConfusionMatrix matrix;
  TrainReport report;
  std::filesystem::path checkpoint;
  std::filesystem::path split_csv;
};

struct KFoldReport {
  std::vector<std::string> class_names;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  ConfusionMatrix averaged;

  nlohmann::json to_json() const;
};

struct KFoldOptions {
  int folds = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> fractions{0.72, 0.18, 0.10};
  bool disjoint = false;
  std::size_t negatives_per_epoch = 175;
  double validation_negative_ratio = 0.5;
  TrainingSchedule schedule{};
  AugmentConfig augment{};
  std::filesystem::path out_dir = "out";
  std::ostream* progress = nullptr;
  bool strict = false;
  std::string config_hash;
};

// For each seed: split, fresh head on a copy of the base network, full
// training, sliding-window classification of the test split.
KFoldReport kfold_evaluate(const Network<float>& base, const CheckpointMetadata& base_meta,
                           const DatasetManifest& target, const KFoldOptions& options, ImageStore& images);

}  // namespace birdxfer
