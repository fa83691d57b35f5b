#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace birdxfer {

enum class Role { kPositive, kNegative };

struct SampleRecord {
  std::string image_path;
  int label_index = 0;
  Role role = Role::kPositive;
  std::string species;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

inline constexpr const char* kNegativeClassName = "negative";

// class_names holds the K positive species in sorted order followed by
// "negative" at index K.
struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  int negative_index() const { return num_classes() - 1; }
  std::vector<SampleRecord> positives() const;
  std::vector<SampleRecord> negatives() const;
};

// CSV with header image_path,species,role (columns in any order). Relative
// paths resolve against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest manifest_from_records(std::vector<SampleRecord> records);
void write_manifest(const std::filesystem::path& path, std::span<const SampleRecord> records);

// Re-indexes labels against a fixed class list (e.g. from a checkpoint).
DatasetManifest relabel(const DatasetManifest& manifest, const std::vector<std::string>& class_names);

// Merges a separate negatives manifest into a positive one.
DatasetManifest merge_negatives(DatasetManifest base, const DatasetManifest& negatives);

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };
const char* split_name(Split s);

struct SplitAssignment {
  std::vector<Split> assignment;  // parallel to the records that were split
  std::uint64_t seed = 0;

  std::vector<std::size_t> counts(std::size_t num_splits) const;
  std::vector<SampleRecord> select(std::span<const SampleRecord> records, Split which) const;
};

// Stratified (per label_index) seeded shuffle. Per class each split receives
// floor(fraction * n) records; the remainder goes one at a time to the splits
// in order, starting with the first.
SplitAssignment split_dataset(std::span<const SampleRecord> records, std::span<const double> fractions,
                              std::uint64_t seed);

// Uniform sample without replacement keyed by (seed, epoch).
std::vector<SampleRecord> sample_negatives(std::span<const SampleRecord> pool, std::size_t count,
                                           std::uint64_t seed, std::uint64_t epoch);

// w_c = N_total / (C * N_c) with C = num_classes.
std::vector<double> class_weights(std::span<const SampleRecord> records, int num_classes);

void write_split_csv(const std::filesystem::path& path, std::span<const SampleRecord> records,
                     const SplitAssignment& split);

}  // namespace birdxfer
