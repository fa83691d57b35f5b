#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"

#include "birdxfer/dataset.hpp"
#include "birdxfer/error.hpp"

using namespace birdxfer;

namespace {

std::vector<SampleRecord> make_records(const std::vector<std::pair<std::string, int>>& species_counts, int negatives) {
  std::vector<SampleRecord> out;
  for (const auto& [name, n] : species_counts)
    for (int i = 0; i < n; ++i) out.push_back({name + "_" + std::to_string(i) + ".png", 0, Role::kPositive, name});
  for (int i = 0; i < negatives; ++i) out.push_back({"neg_" + std::to_string(i) + ".png", 0, Role::kNegative, ""});
  return manifest_from_records(std::move(out)).records;
}

// Expected split sizes for one class: floor shares, then the leftover handed
// out one at a time from the first split onwards.
std::vector<std::size_t> expected_counts(std::size_t n, const std::vector<double>& fractions) {
  std::vector<std::size_t> out;
  std::size_t used = 0;
  for (double f : fractions) {
    std::size_t k = 0;
    while (static_cast<double>(k + 1) <= f * static_cast<double>(n) + 1e-9) ++k;
    out.push_back(k);
    used += k;
  }
  for (std::size_t s = 0; used < n; ++used, s = (s + 1) % out.size()) ++out[s];
  return out;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("class index convention") {
    const auto m = manifest_from_records(make_records({{"wren", 3}, {"auk", 2}}, 4));
    CHECK(m.class_names == std::vector<std::string>{"auk", "wren", "negative"});
    CHECK(m.negative_index() == 2);
    for (const auto& r : m.records) {
      if (r.role == Role::kNegative) CHECK(r.label_index == 2);
      else CHECK(m.class_names[r.label_index] == r.species);
    }
    CHECK(m.positives().size() == 5);
    CHECK(m.negatives().size() == 4);
  }

  TEST_CASE("manifest round trip and errors") {
    bxtest::TempDir dir;
    const auto records = make_records({{"a", 2}, {"b, quoted", 1}}, 2);
    std::vector<SampleRecord> abs = records;
    for (auto& r : abs) r.image_path = (dir.path() / r.image_path).string();
    write_manifest(dir / "m.csv", abs);
    const auto back = load_manifest(dir / "m.csv");
    CHECK(back.records == manifest_from_records(abs).records);

    CHECK_THROWS_AS(load_manifest(dir / "none.csv"), IoError);
    std::ofstream(dir / "bad.csv") << "path,label\nx,y\n";
    CHECK_THROWS_AS(load_manifest(dir / "bad.csv"), FormatError);
    std::ofstream(dir / "role.csv") << "image_path,species,role\nx.png,a,maybe\n";
    CHECK_THROWS_AS(load_manifest(dir / "role.csv"), FormatError);
    std::ofstream(dir / "empty.csv") << "image_path,species,role\n";
    CHECK_THROWS_AS(load_manifest(dir / "empty.csv"), ValidationError);
    auto dup = records;
    dup.push_back(dup.front());
    CHECK_THROWS_AS(manifest_from_records(dup), ValidationError);
  }

  TEST_CASE("relabel and merge") {
    const auto m = manifest_from_records(make_records({{"a", 2}, {"b", 2}}, 1));
    const auto r = relabel(m, {"b", "a", "c", "negative"});
    for (const auto& rec : r.records) {
      if (rec.role == Role::kNegative) CHECK(rec.label_index == 3);
      else CHECK(rec.label_index == (rec.species == "b" ? 0 : 1));
    }
    CHECK_THROWS_AS(relabel(m, {"a", "negative"}), ValidationError);
    CHECK_THROWS_AS(relabel(m, {"a", "b"}), ValidationError);

    const auto pos = manifest_from_records(make_records({{"a", 2}}, 0));
    const auto neg = manifest_from_records(make_records({}, 3));
    const auto merged = merge_negatives(pos, neg);
    CHECK(merged.records.size() == 5);
    CHECK(merged.negatives().size() == 3);
    CHECK_THROWS_AS(merge_negatives(merged, neg), ValidationError);
  }

  TEST_CASE("single stratum of 351 splits 253 / 63 / 35") {
    const auto recs = make_records({{"a", 351}}, 0);
    const std::vector<double> f{0.72, 0.18, 0.10};
    const auto s = split_dataset(recs, f, 7);
    CHECK(s.counts(3) == std::vector<std::size_t>{253, 63, 35});
    CHECK(expected_counts(351, f) == std::vector<std::size_t>{253, 63, 35});
  }

  TEST_CASE("stratified split sizes follow the remainder rule") {
    const std::vector<std::vector<double>> fraction_sets{{0.72, 0.18, 0.10}, {0.8, 0.2}, {0.5, 0.3, 0.2}};
    for (const auto& f : fraction_sets) {
      for (int n : {3, 4, 7, 10, 11, 23, 50, 101}) {
        const auto recs = make_records({{"a", n}, {"b", n + 2}}, 0);
        const auto s = split_dataset(recs, f, static_cast<std::uint64_t>(n));
        for (int label = 0; label < 2; ++label) {
          std::vector<std::size_t> got(f.size(), 0);
          for (std::size_t i = 0; i < recs.size(); ++i)
            if (recs[i].label_index == label) ++got[static_cast<std::size_t>(s.assignment[i])];
          CHECK(got == expected_counts(static_cast<std::size_t>(n + 2 * label), f));
        }
      }
    }
  }

  TEST_CASE("split is seeded and rejects bad input") {
    const auto recs = make_records({{"a", 40}, {"b", 30}}, 0);
    const std::vector<double> f{0.72, 0.18, 0.10};
    CHECK(split_dataset(recs, f, 3).assignment == split_dataset(recs, f, 3).assignment);
    CHECK(split_dataset(recs, f, 3).assignment != split_dataset(recs, f, 4).assignment);
    const std::vector<double> bad{0.5, 0.4};
    CHECK_THROWS_AS(split_dataset(recs, bad, 1), InvalidArgument);
    const auto tiny = make_records({{"a", 2}}, 0);
    CHECK_THROWS_AS(split_dataset(tiny, f, 1), ValidationError);
    const auto s = split_dataset(recs, f, 3);
    std::size_t total = 0;
    for (auto which : {Split::kTrain, Split::kValidation, Split::kTest}) total += s.select(recs, which).size();
    CHECK(total == recs.size());
  }

  TEST_CASE("sample_negatives") {
    const auto pool = make_records({}, 50);
    const auto a = sample_negatives(pool, 20, 9, 1);
    CHECK(a.size() == 20);
    std::set<std::string> unique;
    for (const auto& r : a) unique.insert(r.image_path);
    CHECK(unique.size() == 20);
    CHECK(sample_negatives(pool, 20, 9, 1) == a);
    CHECK(sample_negatives(pool, 20, 9, 2) != a);
    CHECK(sample_negatives(pool, 50, 9, 1).size() == 50);
    CHECK_THROWS_AS(sample_negatives(pool, 51, 9, 1), ValidationError);

    // Every pool member is equally likely over many epochs.
    std::vector<int> hits(50, 0);
    for (int epoch = 0; epoch < 2000; ++epoch)
      for (const auto& r : sample_negatives(pool, 10, 1, epoch)) ++hits[std::stoi(r.image_path.substr(4))];
    for (int h : hits) CHECK(std::abs(h - 400) < 80);
  }

  TEST_CASE("class weights") {
    const auto recs = make_records({{"a", 10}, {"b", 30}}, 60);
    const auto w = class_weights(recs, 3);
    // 100 records over 3 classes.
    CHECK(w[0] == doctest::Approx(100.0 / 30.0));
    CHECK(w[1] == doctest::Approx(100.0 / 90.0));
    CHECK(w[2] == doctest::Approx(100.0 / 180.0));
    double weighted = 0.0;
    for (const auto& r : recs) weighted += w[r.label_index];
    CHECK(weighted == doctest::Approx(100.0));
    CHECK_THROWS_AS(class_weights(recs, 4), ValidationError);
  }

  TEST_CASE("split csv") {
    bxtest::TempDir dir;
    const auto recs = make_records({{"a", 10}}, 0);
    const std::vector<double> f{0.8, 0.2};
    const auto s = split_dataset(recs, f, 1);
    write_split_csv(dir / "s.csv", recs, s);
    const auto text = bxtest::read_bytes(dir / "s.csv");
    CHECK(text.rfind("image_path,species,role,split\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  }
}
