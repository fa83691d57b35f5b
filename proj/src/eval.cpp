#include "birdxfer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "birdxfer/error.hpp"
#include "birdxfer/inference.hpp"
#include "birdxfer/png_io.hpp"
#include "birdxfer/random.hpp"

namespace birdxfer {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths) {
  if (predictions.empty() || truths.empty()) throw InvalidArgument("accuracy: empty label list");
  if (predictions.size() != truths.size()) throw InvalidArgument("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) hits += predictions[i] == truths[i];
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

long long ConfusionMatrix::trace() const {
  long long t = 0;
  for (int i = 0; i < num_classes; ++i) t += counts[i][i];
  return t;
}

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
  if (!normalized.empty()) return normalized;
  std::vector<std::vector<double>> out(num_classes, std::vector<double>(num_classes, 0.0));
  for (int r = 0; r < num_classes; ++r) {
    const long long sum = std::accumulate(counts[r].begin(), counts[r].end(), 0LL);
    if (sum == 0) continue;
    for (int c = 0; c < num_classes; ++c) out[r][c] = static_cast<double>(counts[r][c]) / static_cast<double>(sum);
  }
  return out;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& truths,
                                 int num_classes) {
  if (predictions.size() != truths.size()) throw InvalidArgument("confusion_matrix: length mismatch");
  if (num_classes < 1) throw InvalidArgument("confusion_matrix: num_classes must be positive");
  ConfusionMatrix m;
  m.num_classes = num_classes;
  m.counts.assign(num_classes, std::vector<long long>(num_classes, 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const int a = truths[i], p = predictions[i];
    if (a < 0 || a >= num_classes || p < 0 || p >= num_classes) {
      throw InvalidArgument("confusion_matrix: label out of range at position " + std::to_string(i));
    }
    ++m.counts[a][p];
  }
  return m;
}

ConfusionMatrix average_folds(const std::vector<ConfusionMatrix>& matrices) {
  if (matrices.empty()) throw InvalidArgument("average_folds: no matrices");
  const int k = matrices.front().num_classes;
  ConfusionMatrix avg;
  avg.num_classes = k;
  avg.counts.assign(k, std::vector<long long>(k, 0));
  avg.normalized.assign(k, std::vector<double>(k, 0.0));
  avg.fold_count = static_cast<int>(matrices.size());
  for (const auto& m : matrices) {
    if (m.num_classes != k) throw InvalidArgument("average_folds: shape mismatch");
    const auto norm = m.row_normalized();
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        avg.counts[r][c] += m.counts[r][c];
        avg.normalized[r][c] += norm[r][c];
      }
  }
  for (auto& row : avg.normalized)
    for (auto& v : row) v /= static_cast<double>(matrices.size());
  return avg;
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void write_matrix_csv(const std::filesystem::path& path, const ConfusionMatrix& m,
                      const std::vector<std::string>& class_names) {
  if (static_cast<int>(class_names.size()) != m.num_classes) {
    throw InvalidArgument("write_matrix_csv: class name count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const auto norm = m.row_normalized();
  out << "actual";
  for (const auto& n : class_names) out << "," << n;
  out << "\n";
  out.precision(6);
  for (int r = 0; r < m.num_classes; ++r) {
    out << class_names[r];
    for (int c = 0; c < m.num_classes; ++c) out << "," << norm[r][c];
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void render_matrix_png(const std::filesystem::path& path, const ConfusionMatrix& m, int cell) {
  if (cell < 1) throw InvalidArgument("render_matrix_png: cell size must be positive");
  const auto norm = m.row_normalized();
  Grid<std::uint8_t> px(m.num_classes * cell, m.num_classes * cell, 255);
  for (int r = 0; r < px.rows; ++r)
    for (int c = 0; c < px.cols; ++c) {
      const double v = std::clamp(norm[r / cell][c / cell], 0.0, 1.0);
      px.at(r, c) = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)));
    }
  write_gray_png(path, px, {{"Comment", "confusion matrix: rows actual, columns predicted"}});
}

StagePartition partition_stage(std::span<const SampleRecord> positives, std::span<const SampleRecord> negatives,
                               const SplitAssignment& assignment, double validation_negative_ratio,
                               std::size_t negatives_per_epoch, std::uint64_t seed, bool strict) {
  if (assignment.assignment.size() != positives.size()) {
    throw InvalidArgument("partition_stage: assignment does not match the positive records");
  }
  StagePartition part;
  part.data.train = assignment.select(positives, Split::kTrain);
  part.data.validation = assignment.select(positives, Split::kValidation);
  part.test = assignment.select(positives, Split::kTest);
  part.train_positives_all = part.data.train;

  std::vector<SampleRecord> pool(negatives.begin(), negatives.end());
  Rng rng(mix_seed({seed, 0x6e656773ull}));
  std::shuffle(pool.begin(), pool.end(), rng.engine());
  auto want = [&](std::size_t n) { return static_cast<std::size_t>(std::llround(validation_negative_ratio * n)); };
  const std::size_t n_val = want(part.data.validation.size());
  const std::size_t n_test = want(part.test.size());
  if (n_val + n_test > pool.size()) {
    throw ValidationError("not enough negatives: need " + std::to_string(n_val + n_test) +
                          " for validation/test, have " + std::to_string(pool.size()));
  }
  part.data.validation.insert(part.data.validation.end(), pool.begin(), pool.begin() + n_val);
  part.test.insert(part.test.end(), pool.begin() + n_val, pool.begin() + n_val + n_test);
  part.data.negative_pool.assign(pool.begin() + n_val + n_test, pool.end());

  part.data.negatives_per_epoch = negatives_per_epoch;
  if (negatives_per_epoch > part.data.negative_pool.size()) {
    const std::string msg = "negatives_per_epoch " + std::to_string(negatives_per_epoch) + " exceeds the pool of " +
                            std::to_string(part.data.negative_pool.size()) + " training negatives";
    if (strict) throw ValidationError(msg);
    warn(msg + "; using the whole pool");
    part.data.negatives_per_epoch = part.data.negative_pool.size();
  }
  return part;
}

SplitAssignment disjoint_fold_assignment(std::span<const SampleRecord> records, int folds, int fold_index,
                                         std::uint64_t seed) {
  if (folds < 3) throw InvalidArgument("disjoint folds need at least 3 parts");
  if (fold_index < 0 || fold_index >= folds) throw InvalidArgument("fold index out of range");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label_index].push_back(i);
  SplitAssignment out;
  out.seed = seed;
  out.assignment.assign(records.size(), Split::kTrain);
  for (auto& [label, idx] : by_class) {
    if (static_cast<int>(idx.size()) < folds) {
      throw ValidationError("class " + std::to_string(label) + " has fewer records than folds");
    }
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(label), 0x666f6c64ull}));
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const int part = static_cast<int>(j % folds);
      if (part == fold_index) out.assignment[idx[j]] = Split::kTest;
      else if (part == (fold_index + 1) % folds) out.assignment[idx[j]] = Split::kValidation;
    }
  }
  return out;
}

void assert_disjoint(const StagePartition& partition) {
  std::set<std::string> seen;
  for (const auto* list : {&partition.data.train, &partition.data.validation, &partition.data.negative_pool})
    for (const auto& r : *list) seen.insert(r.image_path);
  for (const auto& r : partition.test) {
    if (seen.count(r.image_path)) throw ValidationError("test record also used for training/validation: " + r.image_path);
  }
}

nlohmann::json KFoldReport::to_json() const {
  auto matrix_json = [](const ConfusionMatrix& m) {
    return nlohmann::json{{"counts", m.counts}, {"normalized", m.row_normalized()}, {"fold_count", m.fold_count}};
  };
  nlohmann::json j;
  j["class_names"] = class_names;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    j["folds"].push_back({{"seed", f.seed},
                          {"split_counts",
                           {{"train", f.train_count},
                            {"validation", f.validation_count},
                            {"test", f.test_count},
                            {"train_negative_pool", f.train_negative_pool},
                            {"validation_negatives", f.validation_negatives},
                            {"test_negatives", f.test_negatives}}},
                          {"negatives_per_epoch", f.report.epochs.empty() ? 0 : f.report.epochs.front().negatives},
                          {"accuracy", f.accuracy},
                          {"matrix", matrix_json(f.matrix)},
                          {"checkpoint", f.checkpoint.string()},
                          {"split_csv", f.split_csv.string()},
                          {"train_report", f.report.to_json()}});
  }
  j["mean_accuracy"] = mean_accuracy;
  j["std_accuracy"] = std_accuracy;
  j["averaged_matrix"] = matrix_json(averaged);
  return j;
}

KFoldReport kfold_evaluate(const Network<float>& base, const CheckpointMetadata& base_meta,
                           const DatasetManifest& target, const KFoldOptions& options, ImageStore& images) {
  if (options.folds < 1) throw InvalidArgument("kfold_evaluate: folds must be >= 1");
  if (static_cast<int>(options.seeds.size()) != options.folds) {
    throw InvalidArgument("kfold_evaluate: " + std::to_string(options.seeds.size()) + " seeds for " +
                          std::to_string(options.folds) + " folds");
  }
  const auto positives = target.positives();
  const auto negatives = target.negatives();
  const int classes = target.num_classes();

  KFoldReport report;
  report.class_names = target.class_names;
  std::vector<ConfusionMatrix> matrices;
  std::vector<double> accuracies;
  std::filesystem::create_directories(options.out_dir);

  for (int fold = 0; fold < options.folds; ++fold) {
    const std::uint64_t seed = options.seeds[fold];
    const SplitAssignment assignment =
        options.disjoint ? disjoint_fold_assignment(positives, options.folds, fold, options.seeds.front())
                         : split_dataset(positives, options.fractions, seed);
    const StagePartition part = partition_stage(positives, negatives, assignment, options.validation_negative_ratio,
                                                options.negatives_per_epoch, seed, options.strict);
    assert_disjoint(part);
    if (part.test.empty()) throw ValidationError("fold " + std::to_string(fold) + " has an empty test split");

    FoldResult result;
    result.seed = seed;
    result.train_count = part.data.train.size();
    result.validation_count = part.data.validation.size();
    result.test_count = part.test.size();
    result.train_negative_pool = part.data.negative_pool.size();
    for (const auto& r : part.data.validation) result.validation_negatives += r.role == Role::kNegative;
    for (const auto& r : part.test) result.test_negatives += r.role == Role::kNegative;

    const auto fold_dir = options.out_dir / ("fold_" + std::to_string(fold));
    std::filesystem::create_directories(fold_dir);
    result.split_csv = options.out_dir / ("split_" + std::to_string(seed) + ".csv");
    write_split_csv(result.split_csv, positives, assignment);

    Network<float> net = base;
    net.replace_head(classes, seed);
    CheckpointMetadata meta = base_meta;
    meta.stage = "target";
    meta.class_names = target.class_names;
    meta.augment = options.augment;
    meta.init.head_bound = head_init_bound(net.backbone().out_channels(), classes);
    meta.extra = {{"fold", fold}, {"fold_seed", seed}};

    TrainOptions topts;
    topts.checkpoint_path = fold_dir / "best.ckpt";
    topts.metadata = meta;
    topts.augment = options.augment;
    topts.seed = seed;
    topts.progress = options.progress;
    topts.config_hash = options.config_hash;
    if (options.progress) *options.progress << "fold=" << fold << " seed=" << seed << std::endl;
    result.report = train(net, part.data, options.schedule, topts, images);
    result.checkpoint = topts.checkpoint_path;

    std::vector<int> preds, truths;
    const int window = options.augment.crop_cols;
    for (const auto& r : part.test) {
      const auto pred = predict_clip(net, images.get(r.image_path), window, window / 2);
      preds.push_back(classify(pred.scores));
      truths.push_back(r.label_index);
    }
    result.accuracy = accuracy(preds, truths);
    result.matrix = confusion_matrix(preds, truths, classes);
    if (options.progress) *options.progress << "fold=" << fold << " test_accuracy=" << result.accuracy << std::endl;
    matrices.push_back(result.matrix);
    accuracies.push_back(result.accuracy);
    report.folds.push_back(std::move(result));
  }
  report.mean_accuracy = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / accuracies.size();
  report.std_accuracy = sample_std(accuracies);
  report.averaged = average_folds(matrices);
  return report;
}

}  // namespace birdxfer
