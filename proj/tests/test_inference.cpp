#include <algorithm>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

#include "birdxfer/error.hpp"
#include "birdxfer/inference.hpp"

using namespace birdxfer;

namespace {

GraySpectrogram random_image(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  GraySpectrogram g;
  g.pixels = Grid<std::uint8_t>(rows, cols);
  for (auto& v : g.pixels.data) v = static_cast<std::uint8_t>(u(rng));
  return g;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("window origins") {
    CHECK(window_origins(256) == std::vector<int>{0});
    CHECK(window_origins(512) == std::vector<int>{0, 128, 256});
    CHECK(window_origins(300) == std::vector<int>{0, 44});
    CHECK(window_origins(100) == std::vector<int>{0});
    CHECK(window_origins(700) == std::vector<int>{0, 128, 256, 384, 444});
    CHECK(window_origins(40, 16, 8) == std::vector<int>{0, 8, 16, 24});
  }

  TEST_CASE("windows cover every column") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> cols(256, 5000);
    for (int t = 0; t < 200; ++t) {
      const int n = cols(rng);
      const auto o = window_origins(n);
      CHECK(o.front() == 0);
      CHECK(o.back() == n - 256);
      for (std::size_t i = 1; i < o.size(); ++i) {
        CHECK(o[i] > o[i - 1]);
        CHECK(o[i] - o[i - 1] <= 128);
      }
      for (std::size_t i = 0; i + 1 < o.size(); ++i) CHECK(o[i] % 128 == 0);
    }
  }

  TEST_CASE("window_image") {
    const auto img = random_image(256, 300, 2);
    const auto ws = window_image(img);
    REQUIRE(ws.windows.size() == 2);
    for (std::size_t k = 0; k < 2; ++k)
      for (int r = 0; r < 256; r += 17)
        for (int c = 0; c < 256; c += 13)
          CHECK(ws.windows[k].pixels.at(r, c) == img.pixels.at(r, ws.origins[k] + c));
    const auto narrow = random_image(256, 100, 3);
    const auto wn = window_image(narrow);
    REQUIRE(wn.windows.size() == 1);
    CHECK(wn.windows[0].pixels.at(5, 250) == narrow.pixels.at(5, 50));
    CHECK_THROWS_AS(window_image(random_image(200, 300, 4)), ValidationError);
  }

  TEST_CASE("aggregation is the per-class maximum") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0, 1);
    for (int t = 0; t < 50; ++t) {
      std::vector<std::vector<float>> pw(1 + t % 6, std::vector<float>(4));
      for (auto& row : pw)
        for (auto& v : row) v = u(rng);
      const auto agg = aggregate_max(pw);
      for (int c = 0; c < 4; ++c) {
        float mx = 0;
        for (const auto& row : pw) {
          CHECK(agg[c] >= row[c]);
          mx = std::max(mx, row[c]);
        }
        CHECK(agg[c] == mx);
      }
    }
  }

  TEST_CASE("predict_clip scores each normalized window") {
    auto net = build_model<float>(bxtest::tiny_model(3), std::nullopt, 3);
    const auto img = random_image(64, 150, 6);
    const auto p = predict_clip(net, img, 64, 32);
    CHECK(p.window_origins == window_origins(150, 64, 32));
    REQUIRE(p.per_window_scores.size() == p.window_origins.size());
    CHECK(p.scores == aggregate_max(p.per_window_scores));
    const auto ws = window_image(img, 64, 32, 64);
    for (std::size_t k = 0; k < ws.windows.size(); ++k) {
      const std::vector<FloatImage> one{minmax_normalize(ws.windows[k])};
      const auto s = net.forward(stack_views<float>(std::span<const FloatImage>(one)), Mode::kEval);
      for (int c = 0; c < 3; ++c) CHECK(p.per_window_scores[k][c] == doctest::Approx(s.data[c]).epsilon(1e-5));
    }
    for (float s : p.scores) {
      CHECK(s > 0.0f);
      CHECK(s < 1.0f);
    }
  }

  TEST_CASE("classification rules") {
    CHECK(classify({0.1f, 0.7f, 0.7f}) == 1);
    CHECK(classify({0.9f, 0.1f, 0.2f}) == 0);
    CHECK(classify({0.5f, 0.5f, 0.5f}) == 0);
    CHECK(classify_multi({0.6f, 0.8f, 0.2f, 0.9f}, 0.5, 3) == std::vector<int>{0, 1});
    CHECK(classify_multi({0.1f, 0.2f, 0.9f}, 0.5, 2) == std::vector<int>{2});
    CHECK(classify_multi({0.5f, 0.2f, 0.0f}, 0.5, 2) == std::vector<int>{0});
    CHECK_THROWS_AS(classify_multi({0.5f}, 1.5, 0), InvalidArgument);
    CHECK_THROWS_AS(classify_multi({0.5f}, 0.0, 0), InvalidArgument);
  }
}
