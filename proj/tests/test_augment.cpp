#include <algorithm>
#include <deque>

#include "doctest.h"

#include "birdxfer/augment.hpp"
#include "birdxfer/error.hpp"

using namespace birdxfer;

namespace {

// Replays fixed draws; fails the test if the code asks for more.
class ScriptedSource final : public RandomSource {
 public:
  std::deque<double> uniforms;
  std::deque<std::int64_t> integers;
  std::vector<std::pair<double, double>> uniform_ranges;
  std::vector<std::pair<std::int64_t, std::int64_t>> integer_ranges;

  double uniform(double lo, double hi) override {
    uniform_ranges.emplace_back(lo, hi);
    REQUIRE(!uniforms.empty());
    const double v = uniforms.front();
    uniforms.pop_front();
    return v;
  }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) override {
    integer_ranges.emplace_back(lo, hi);
    REQUIRE(!integers.empty());
    const auto v = integers.front();
    integers.pop_front();
    return v;
  }
};

GraySpectrogram ramp(int rows, int cols) {
  GraySpectrogram g;
  g.pixels = Grid<std::uint8_t>(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g.pixels.at(r, c) = static_cast<std::uint8_t>((r * 7 + c * 3) % 256);
  return g;
}

}  // namespace

TEST_SUITE("augment") {
  TEST_CASE("random_scale draws rows then columns") {
    ScriptedSource src;
    src.uniforms = {0.9, 1.1};
    const auto out = random_scale(ramp(256, 300), src);
    CHECK(out.rows() == 230);  // round(256 * 0.9)
    CHECK(out.cols() == 330);
    REQUIRE(src.uniform_ranges.size() == 2);
    CHECK(src.uniform_ranges[0] == std::pair{0.9, 1.1});
    src.uniforms = {1.0, 1.0};
    const auto same = random_scale(ramp(20, 30), src);
    CHECK(same.pixels == to_float(ramp(20, 30)).pixels);
  }

  TEST_CASE("random_crop origin ranges and wrap padding") {
    ScriptedSource src;
    AugmentConfig cfg;
    cfg.crop_rows = 4;
    cfg.crop_cols = 5;
    const auto img = to_float(ramp(10, 12));
    src.integers = {6, 7};
    const auto c = random_crop(img, src, cfg);
    CHECK(src.integer_ranges[0] == std::pair<std::int64_t, std::int64_t>{0, 6});
    CHECK(src.integer_ranges[1] == std::pair<std::int64_t, std::int64_t>{0, 7});
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 5; ++k) CHECK(c.pixels.at(r, k) == img.pixels.at(6 + r, 7 + k));

    // Narrow image: columns tile, one origin choice.
    const auto narrow = to_float(ramp(4, 3));
    src.integers = {0, 0};
    const auto w = random_crop(narrow, src, cfg);
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 5; ++k) CHECK(w.pixels.at(r, k) == narrow.pixels.at(r, k % 3));
    CHECK(src.integer_ranges[3] == std::pair<std::int64_t, std::int64_t>{0, 0});

    const auto z = crop_at(narrow, 0, 0, 4, 5, PadMode::kZero);
    CHECK(z.pixels.at(1, 4) == 0.0f);
    CHECK(z.pixels.at(1, 2) == narrow.pixels.at(1, 2));
    CHECK_THROWS_AS(crop_at(img, 8, 0, 4, 5, PadMode::kWrap), InvalidArgument);
  }

  TEST_CASE("add_noise is additive, unclamped and range-checked") {
    ScriptedSource src;
    FloatImage img;
    img.pixels = Grid<float>(1, 3, 250.0f);
    src.uniforms = {0.0, 12.5, 25.0};
    const auto n = add_noise(img, src);
    CHECK(n.pixels.data == std::vector<float>{250.0f, 262.5f, 275.0f});
    for (const auto& [lo, hi] : src.uniform_ranges) {
      CHECK(lo == 0.0);
      CHECK(hi == 25.0);
    }
    const auto unit = minmax_normalize(n);
    CHECK_THROWS_AS(add_noise(unit, src), InvalidArgument);
  }

  TEST_CASE("minmax_normalize") {
    FloatImage img;
    img.pixels = Grid<float>(2, 2);
    img.pixels.data = {10.0f, 20.0f, 30.0f, 50.0f};
    const auto u = minmax_normalize(img);
    CHECK(u.tag == RangeTag::kUnit);
    CHECK(u.pixels.data[0] == 0.0f);
    CHECK(u.pixels.data[1] == doctest::Approx(0.25));
    CHECK(u.pixels.data[2] == doctest::Approx(0.5));
    CHECK(u.pixels.data[3] == 1.0f);
    img.pixels.data = {7.0f, 7.0f, 7.0f, 7.0f};
    for (float v : minmax_normalize(img).pixels.data) CHECK(v == 0.0f);
  }

  TEST_CASE("training views are 256 x 256 in [0, 1]") {
    Rng rng(5);
    for (int cols : {40, 256, 700}) {
      const auto v = training_view(ramp(256, cols), rng);
      CHECK(v.rows() == 256);
      CHECK(v.cols() == 256);
      const auto [lo, hi] = std::minmax_element(v.pixels.data.begin(), v.pixels.data.end());
      CHECK(*lo == 0.0f);
      CHECK(*hi == 1.0f);
      const auto val = validation_view(ramp(256, cols), rng);
      CHECK(val.cols() == 256);
    }
  }

  TEST_CASE("identity draws reduce a view to plain normalization") {
    ScriptedSource src;
    src.uniforms.assign(2 + 256 * 256, 0.0);
    src.uniforms[0] = src.uniforms[1] = 1.0;
    src.integers = {0, 0};
    const auto img = ramp(256, 256);
    CHECK(training_view(img, src).pixels == minmax_normalize(to_float(img)).pixels);
  }

  TEST_CASE("pipeline is reproducible per seed") {
    const auto img = ramp(256, 400);
    Rng a(42), b(42), c(43);
    const auto va = training_view(img, a);
    CHECK(training_view(img, b).pixels == va.pixels);
    CHECK(training_view(img, c).pixels != va.pixels);
  }

  TEST_CASE("config parsing") {
    CHECK(parse_pad_mode("wrap") == PadMode::kWrap);
    CHECK(parse_pad_mode("zero") == PadMode::kZero);
    CHECK_THROWS_AS(parse_pad_mode("mirror"), ConfigError);
    AugmentConfig cfg;
    cfg.scale_min = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
