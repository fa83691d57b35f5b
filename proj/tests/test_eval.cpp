#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"

#include "birdxfer/error.hpp"
#include "birdxfer/eval.hpp"

using namespace birdxfer;

TEST_SUITE("eval") {
  TEST_CASE("accuracy equals trace over total") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> cls(0, 4);
    for (int t = 0; t < 50; ++t) {
      std::vector<int> p(37), y(37);
      for (int i = 0; i < 37; ++i) {
        y[i] = cls(rng);
        p[i] = t % 3 == 0 ? y[i] : cls(rng);
      }
      const auto m = confusion_matrix(p, y, 5);
      CHECK(m.total() == 37);
      CHECK(static_cast<double>(m.trace()) / m.total() == doctest::Approx(accuracy(p, y)).epsilon(1e-15));
      for (int i = 0; i < 37; ++i) CHECK(m.counts[y[i]][p[i]] >= 1);
    }
    CHECK(accuracy({1, 2, 3, 4}, {1, 2, 0, 4}) == 0.75);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), InvalidArgument);
    CHECK_THROWS_AS(confusion_matrix({5}, {0}, 3), InvalidArgument);
  }

  TEST_CASE("rows are actual classes") {
    const auto m = confusion_matrix({1, 1, 0}, {0, 0, 0}, 2);
    CHECK(m.counts[0][1] == 2);
    CHECK(m.counts[0][0] == 1);
    CHECK(m.counts[1][0] == 0);
    const auto n = m.row_normalized();
    CHECK(n[0][1] == doctest::Approx(2.0 / 3));
    CHECK(n[1][0] == 0.0);
    CHECK(n[1][1] == 0.0);
  }

  TEST_CASE("fold averaging keeps rows stochastic") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> cls(0, 3);
    std::vector<ConfusionMatrix> folds;
    for (int f = 0; f < 5; ++f) {
      std::vector<int> p(20 + f * 7), y(20 + f * 7);
      for (std::size_t i = 0; i < p.size(); ++i) {
        y[i] = cls(rng);
        p[i] = cls(rng);
      }
      folds.push_back(confusion_matrix(p, y, 4));
    }
    const auto avg = average_folds(folds);
    CHECK(avg.fold_count == 5);
    for (int r = 0; r < 4; ++r) {
      double sum = 0, manual = 0;
      for (int c = 0; c < 4; ++c) {
        sum += avg.normalized[r][c];
        double mean = 0;
        for (const auto& f : folds) mean += f.row_normalized()[r][c];
        manual += mean / 5;
        CHECK(avg.normalized[r][c] == doctest::Approx(mean / 5).epsilon(1e-12));
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
      CHECK(manual == doctest::Approx(sum));
    }
    CHECK_THROWS_AS(average_folds({}), InvalidArgument);
  }

  TEST_CASE("sample standard deviation") {
    CHECK(sample_std({2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
    CHECK(sample_std({3.0}) == 0.0);
    CHECK(sample_std({0.9, 0.9, 0.9}) == doctest::Approx(0.0));
  }

  TEST_CASE("matrix exports") {
    bxtest::TempDir dir;
    const auto m = average_folds({confusion_matrix({0, 1, 1}, {0, 1, 0}, 2)});
    write_matrix_csv(dir / "m.csv", m, {"a", "negative"});
    const auto text = bxtest::read_bytes(dir / "m.csv");
    CHECK(text.rfind("actual,a,negative\n", 0) == 0);
    render_matrix_png(dir / "m.png", m);
    const auto png = read_gray_png(dir / "m.png");
    CHECK(png.pixels.rows == 32);
    CHECK(png.pixels.cols == 32);
  }

  TEST_CASE("stage partition negative budgets") {
    bxtest::TempDir dir;
    std::vector<SampleRecord> pos, neg;
    for (int i = 0; i < 351; ++i) pos.push_back({"p" + std::to_string(i), 0, Role::kPositive, "a"});
    for (int i = 0; i < 702; ++i) neg.push_back({"n" + std::to_string(i), 1, Role::kNegative, ""});
    const std::vector<double> f{0.72, 0.18, 0.10};
    const auto split = split_dataset(pos, f, 3);
    const auto part = partition_stage(pos, neg, split, 0.5, 175, 3, true);
    CHECK(part.data.train.size() == 253);
    CHECK(part.data.validation.size() == 63 + 32);  // llround(31.5)
    CHECK(part.test.size() == 35 + 18);              // llround(17.5)
    CHECK(part.data.negative_pool.size() == 702 - 32 - 18);
    CHECK(part.data.negatives_per_epoch == 175);
    CHECK_NOTHROW(assert_disjoint(part));
    std::set<std::string> all;
    for (const auto* l : {&part.data.train, &part.data.validation, &part.test, &part.data.negative_pool})
      for (const auto& r : *l) CHECK(all.insert(r.image_path).second);
    CHECK(all.size() == pos.size() + neg.size());

    const auto clamped = partition_stage(pos, neg, split, 0.5, 1000, 3, false);
    CHECK(clamped.data.negatives_per_epoch == clamped.data.negative_pool.size());
    CHECK_THROWS_AS(partition_stage(pos, neg, split, 0.5, 1000, 3, true), ValidationError);
    std::vector<SampleRecord> few(neg.begin(), neg.begin() + 10);
    CHECK_THROWS_AS(partition_stage(pos, few, split, 0.5, 0, 3, false), ValidationError);

    auto leaky = part;
    leaky.test.push_back(leaky.data.train.front());
    CHECK_THROWS_AS(assert_disjoint(leaky), ValidationError);
  }

  TEST_CASE("disjoint folds partition the positives") {
    std::vector<SampleRecord> pos;
    for (int i = 0; i < 53; ++i) pos.push_back({"p" + std::to_string(i), i % 3, Role::kPositive, "s"});
    std::vector<int> tested(pos.size(), 0);
    for (int fold = 0; fold < 5; ++fold) {
      const auto a = disjoint_fold_assignment(pos, 5, fold, 7);
      for (std::size_t i = 0; i < pos.size(); ++i) tested[i] += a.assignment[i] == Split::kTest;
    }
    for (int t : tested) CHECK(t == 1);
    CHECK_THROWS_AS(disjoint_fold_assignment(pos, 2, 0, 7), InvalidArgument);
    CHECK_THROWS_AS(disjoint_fold_assignment(pos, 5, 5, 7), InvalidArgument);
  }

  TEST_CASE("k-fold transfer run") {
    bxtest::TempDir dir;
    const auto target = bxtest::tiny_dataset(dir.path(), 2, 10, 20, 64, 80);
    auto base = build_model<float>(bxtest::tiny_model(4), std::nullopt, 1);
    CheckpointMetadata base_meta;
    base_meta.class_names = {"x", "y", "z", "negative"};
    KFoldOptions opts;
    opts.folds = 2;
    opts.seeds = {1, 2};
    opts.negatives_per_epoch = 4;
    opts.schedule.initial_lr = 1e-3;
    opts.schedule.max_epochs = 2;
    opts.augment.crop_rows = 64;
    opts.augment.crop_cols = 64;
    opts.out_dir = dir / "out";
    ImageStore images;
    const auto before = backbone_checksum(base);
    const auto report = kfold_evaluate(base, base_meta, target, opts, images);
    CHECK(backbone_checksum(base) == before);
    REQUIRE(report.folds.size() == 2);
    std::vector<double> accs;
    for (const auto& f : report.folds) {
      CHECK(std::filesystem::exists(f.checkpoint));
      CHECK(std::filesystem::exists(f.split_csv));
      CHECK(f.matrix.total() == static_cast<long long>(f.test_count));
      CHECK(f.accuracy == doctest::Approx(static_cast<double>(f.matrix.trace()) / f.matrix.total()));
      accs.push_back(f.accuracy);
      const auto loaded = load_checkpoint(f.checkpoint);
      CHECK(loaded.meta.stage == "target");
      CHECK(loaded.meta.class_names == target.class_names);
    }
    CHECK(report.mean_accuracy == doctest::Approx((accs[0] + accs[1]) / 2));
    CHECK(report.std_accuracy == doctest::Approx(sample_std(accs)));
    const auto j = report.to_json();
    CHECK(j.at("folds").size() == 2);
    CHECK(j.contains("averaged_matrix"));
  }
}
