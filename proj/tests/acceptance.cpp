// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: acceptance <work_dir> [criterion...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "birdxfer/augment.hpp"
#include "birdxfer/checkpoint.hpp"
#include "birdxfer/config.hpp"
#include "birdxfer/dataset.hpp"
#include "birdxfer/eval.hpp"
#include "birdxfer/inference.hpp"
#include "birdxfer/model.hpp"
#include "birdxfer/random.hpp"
#include "birdxfer/spectrogram.hpp"
#include "birdxfer/synth.hpp"
#include "birdxfer/trainer.hpp"
#include "birdxfer/workflow.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace birdxfer;

namespace {

// Tolerances and budgets.
constexpr double kStftRelTol = 1e-6;
constexpr double kStftBudgetS = 30.0;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradBudgetS = 60.0;
constexpr double kRowSumTol = 1e-9;
constexpr double kOverfitAccuracy = 0.95;
constexpr int kOverfitEpochs = 50;
constexpr double kTransferAccuracy = 0.90;
constexpr double kTrainingBudgetS = 600.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond && out_.pass) out_.detail = what;
    out_.pass = out_.pass && cond;
  }
  void note(const std::string& s) {
    if (out_.pass) extra_ += (extra_.empty() ? "" : "; ") + s;
  }
  Outcome done() {
    if (out_.pass) out_.detail = extra_;
    return out_;
  }

 private:
  Outcome out_;
  std::string extra_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Direct DFT magnitudes of one Hamming-windowed frame, long double accumulation
// over an exact twiddle table.
std::vector<double> naive_frame(const std::vector<float>& x, std::size_t start, int n) {
  static std::vector<long double> cos_t, sin_t, win;
  if (static_cast<int>(cos_t.size()) != n) {
    const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    cos_t.resize(n);
    sin_t.resize(n);
    win.resize(n);
    for (int i = 0; i < n; ++i) {
      cos_t[i] = std::cos(two_pi * i / n);
      sin_t[i] = std::sin(two_pi * i / n);
      win[i] = 0.54L - 0.46L * std::cos(two_pi * i / (n - 1));
    }
  }
  std::vector<long double> frame(n);
  for (int i = 0; i < n; ++i) frame[i] = win[i] * x[start + i];
  std::vector<double> mags(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    long double re = 0, im = 0;
    for (int i = 0; i < n; ++i) {
      const int idx = static_cast<int>((static_cast<long long>(k) * i) % n);
      re += frame[i] * cos_t[idx];
      im -= frame[i] * sin_t[idx];
    }
    mags[k] = static_cast<double>(std::sqrt(re * re + im * im));
  }
  return mags;
}

Outcome criterion1(const fs::path&) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    AudioClip clip;
    clip.samples.resize(2048);
    for (auto& s : clip.samples) s = u(rng);
    const auto raw = stft_power(clip, 1024, 128, Intensity::kMagnitude);
    c.expect(raw.values.rows == 513 && raw.values.cols == 9, "unexpected STFT shape");
    if (raw.values.rows != 513 || raw.values.cols != 9) break;
    for (int col = 0; col < raw.values.cols; ++col) {
      const auto ref = naive_frame(clip.samples, static_cast<std::size_t>(col) * 128, 1024);
      for (int k = 0; k < 513; ++k) {
        const double err = std::abs(raw.values.at(k, col) - ref[k]) / std::max(ref[k], 1e-300);
        worst = std::max(worst, err);
      }
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(worst < kStftRelTol, "max relative error " + fmt(worst));
  c.expect(elapsed < kStftBudgetS, "took " + fmt(elapsed) + " s");
  c.note("max rel err " + fmt(worst) + ", " + fmt(elapsed) + " s");
  return c.done();
}

Outcome criterion2(const fs::path&) {
  Check c;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> len(1024, 22050 * 20);
  for (int i = 0; i < 100; ++i) {
    const int n = len(rng);
    const int expected = 1 + (n - 1024) / 128;
    c.expect(stft_frame_count(static_cast<std::size_t>(n), 1024, 128) == expected,
             "frame count wrong for " + std::to_string(n) + " samples");
  }
  c.expect(resized_columns(165, 513, 256) == 82, "513x165 should resize to 82 columns");
  Grid<double> g(513, 165, 1.0);
  const auto r = resize_rows(g, 256);
  c.expect(r.rows == 256 && r.cols == 82, "resize_rows produced " + std::to_string(r.rows) + "x" + std::to_string(r.cols));
  AudioClip clip;
  clip.samples.resize(22050);
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] = static_cast<float>(0.5 * std::sin(2 * std::numbers::pi * 1000.0 * i / 22050.0));
  const auto img = make_spectrogram(clip);
  c.expect(img.rows() == 256 && img.cols() == 82 && img.original_columns == 165, "1 s clip geometry wrong");
  return c.done();
}

Outcome criterion3(const fs::path&) {
  Check c;
  TrainingSchedule s;
  auto st = initial_state(s, 0);
  std::vector<double> trace;
  std::vector<std::pair<int, int>> halvings;  // (cycle, counter)
  std::vector<int> aborts;                    // counter at abort
  std::vector<double> restart_lrs;
  const int guard = 1000;
  for (int e = 0; e < guard; ++e) {
    trace.push_back(st.lr);
    const auto step = lr_schedule_step(st, 1.0, s);
    if (step.action == ScheduleAction::kHalveLr) halvings.emplace_back(st.restart_index, st.epochs_since_improvement);
    if (step.action == ScheduleAction::kAbortCycle) {
      aborts.push_back(st.epochs_since_improvement);
      if (st.restart_index >= s.restarts) break;
      begin_restart(st, s);
      restart_lrs.push_back(st.lr);
    }
  }
  // Expected: first epoch improves, each cycle then sees 32 flat epochs.
  std::vector<double> expected;
  for (int k = 0; k <= 3; ++k) {
    const double base = 1e-5 * std::pow(0.9, k);
    if (k == 0) expected.push_back(base);
    for (int j = 0; j < 32; ++j) expected.push_back(base * std::pow(0.5, j / 10));
  }
  c.expect(trace == expected, "lr trace differs from expectation (" + std::to_string(trace.size()) + " vs " +
                                  std::to_string(expected.size()) + " epochs)");
  std::vector<std::pair<int, int>> want_h;
  for (int k = 0; k <= 3; ++k)
    for (int h : {10, 20, 30}) want_h.emplace_back(k, h);
  c.expect(halvings == want_h, "halving events differ");
  c.expect(aborts == std::vector<int>{32, 32, 32, 32}, "aborts not at counter 32");
  c.expect(restart_lrs == std::vector<double>{1e-5 * std::pow(0.9, 1), 1e-5 * std::pow(0.9, 2), 1e-5 * std::pow(0.9, 3)},
           "restart lrs wrong");
  return c.done();
}

Outcome criterion4(const fs::path&) {
  Check c;
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> width(60, 700), px(0, 255);
  Rng draws(405);
  for (int i = 0; i < 1000; ++i) {
    GraySpectrogram g;
    g.pixels = Grid<std::uint8_t>(256, width(rng));
    for (auto& v : g.pixels.data) v = static_cast<std::uint8_t>(px(rng));
    const auto view = training_view(g, draws);
    const auto [lo, hi] = std::minmax_element(view.pixels.data.begin(), view.pixels.data.end());
    c.expect(view.rows() == 256 && view.cols() == 256, "view " + std::to_string(i) + " not 256x256");
    c.expect(*lo == 0.0f && *hi == 1.0f, "view " + std::to_string(i) + " range [" + fmt(*lo) + ", " + fmt(*hi) + "]");
    c.expect(view.tag == RangeTag::kUnit, "view not tagged unit range");
  }
  // Identity scale, origin (0, 0) and zero noise: plain min-max normalization.
  GraySpectrogram g;
  g.pixels = Grid<std::uint8_t>(256, 256);
  for (auto& v : g.pixels.data) v = static_cast<std::uint8_t>(px(rng));
  class Stub final : public RandomSource {
   public:
    // row scale, column scale, then noise
    double uniform(double, double) override { return calls_++ < 2 ? 1.0 : 0.0; }
    std::int64_t integer(std::int64_t lo, std::int64_t) override { return lo; }

   private:
    int calls_ = 0;
  } stub;
  const auto view = training_view(g, stub);
  std::vector<float> expected(g.pixels.data.size());
  const float mn = *std::min_element(g.pixels.data.begin(), g.pixels.data.end());
  const float mx = *std::max_element(g.pixels.data.begin(), g.pixels.data.end());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = (g.pixels.data[i] - mn) / (mx - mn);
  double diff = 0;
  for (std::size_t i = 0; i < expected.size(); ++i)
    diff = std::max(diff, static_cast<double>(std::abs(view.pixels.data[i] - expected[i])));
  c.expect(diff <= 1e-6, "stubbed view differs from plain normalization by " + fmt(diff));
  return c.done();
}

Outcome criterion5(const fs::path&) {
  Check c;
  ModelConfig mc;  // ResNet-50, 47 classes
  auto net = build_model<float>(mc, std::nullopt, 5);
  const auto before = backbone_checksum(net);
  Tensor<float> batch(2, 1, 256, 256);
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : batch.data) v = u(rng);
  const auto fmap = net.feature_map(batch, Mode::kEval);
  c.expect(fmap.n == 2 && fmap.c == 2048 && fmap.h == 8 && fmap.w == 8, "feature map " + fmap.shape_string());
  const auto pooled = net.pooled_features(batch, Mode::kEval);
  c.expect(pooled.c == 2048 && pooled.h == 1 && pooled.w == 1, "pooled " + pooled.shape_string());
  auto in_range = [](const Tensor<float>& s) {
    return std::all_of(s.data.begin(), s.data.end(), [](float v) { return v > 0.0f && v < 1.0f; });
  };
  const auto s47 = net.forward(batch, Mode::kEval);
  c.expect(s47.c == 47 && in_range(s47), "47-way scores " + s47.shape_string());
  net.replace_head(11, 6);
  const auto s11 = net.forward(batch, Mode::kEval);
  c.expect(s11.c == 11 && in_range(s11), "11-way scores " + s11.shape_string());
  c.expect(backbone_checksum(net) == before, "backbone checksum changed by head replacement");
  return c.done();
}

// Smooth per-channel quadratic standing in for the backbone: channel k reads
// input channel k % 3 and returns a_k x + b_k x^2.
class QuadraticStub final : public nn::FeatureExtractor<double> {
 public:
  QuadraticStub() {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < kChannels; ++k) {
      a_[k] = u(rng);
      b_[k] = u(rng);
    }
  }
  Tensor<double> forward(const Tensor<double>& x, Mode, bool keep) override {
    if (keep) x_ = x;
    Tensor<double> y(x.n, kChannels, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
      for (int k = 0; k < kChannels; ++k)
        for (int i = 0; i < x.h; ++i)
          for (int j = 0; j < x.w; ++j) {
            const double v = x.at(n, k % 3, i, j);
            y.at(n, k, i, j) = a_[k] * v + b_[k] * v * v;
          }
    return y;
  }
  Tensor<double> backward(const Tensor<double>& g) override {
    Tensor<double> dx = zeros_like(x_);
    for (int n = 0; n < g.n; ++n)
      for (int k = 0; k < kChannels; ++k)
        for (int i = 0; i < g.h; ++i)
          for (int j = 0; j < g.w; ++j)
            dx.at(n, k % 3, i, j) += g.at(n, k, i, j) * (a_[k] + 2.0 * b_[k] * x_.at(n, k % 3, i, j));
    return dx;
  }
  void collect(nn::TensorRegistry<double>&) override {}
  int out_channels() const override { return kChannels; }
  std::unique_ptr<nn::FeatureExtractor<double>> clone() const override {
    return std::make_unique<QuadraticStub>(*this);
  }

 private:
  static constexpr int kChannels = 6;
  double a_[kChannels]{}, b_[kChannels]{};
  Tensor<double> x_;
};

Outcome criterion6(const fs::path&) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig mc;
  mc.num_classes = 4;
  Network<double> net(mc, std::make_unique<QuadraticStub>());
  std::mt19937_64 rng(607);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pix(0.0, 1.0);
  auto reg = net.registry();
  for (auto& p : reg.params)
    for (auto& v : p.value->data) v = 0.5 * u(rng);

  Tensor<double> batch(3, 1, 8, 8);
  for (auto& v : batch.data) v = pix(rng);
  Tensor<double> targets(3, 4, 1, 1);
  for (int n = 0; n < 3; ++n) targets.at(n, n % 4, 0, 0) = 1.0;
  const std::vector<double> weights{0.7, 1.3, 1.0, 2.0};
  const double denom = 3.0 * 4.0;

  auto loss = [&]() {
    const auto s = net.forward(batch, Mode::kEval);
    double l = 0;
    for (int n = 0; n < 3; ++n)
      for (int k = 0; k < 4; ++k) {
        const double p = s.at(n, k, 0, 0), t = targets.at(n, k, 0, 0);
        l -= weights[k] * (t * std::log(p) + (1 - t) * std::log(1 - p));
      }
    return l / denom;
  };

  net.zero_grad();
  const auto s = net.forward(batch, Mode::kEval, true);
  Tensor<double> g(3, 4, 1, 1);
  for (int n = 0; n < 3; ++n)
    for (int k = 0; k < 4; ++k) g.at(n, k, 0, 0) = weights[k] * (s.at(n, k, 0, 0) - targets.at(n, k, 0, 0)) / denom;
  net.backward_from_logits(g);

  std::vector<nn::NamedTensor<double>> params;
  for (auto& p : reg.params)
    if (p.name.rfind("conversion.", 0) == 0 || p.name.rfind("head.", 0) == 0) params.push_back(p);
  c.expect(params.size() == 4, "expected conversion.{w,b} and head.{w,b}");

  double worst = 0.0;
  const double h = 1e-5;
  for (int d = 0; d < 10; ++d) {
    std::vector<std::vector<double>> dir;
    double analytic = 0;
    for (auto& p : params) {
      dir.emplace_back(p.value->size());
      for (std::size_t i = 0; i < dir.back().size(); ++i) {
        dir.back()[i] = u(rng);
        analytic += dir.back()[i] * p.grad->data[i];
      }
    }
    auto shift = [&](double step) {
      for (std::size_t k = 0; k < params.size(); ++k)
        for (std::size_t i = 0; i < dir[k].size(); ++i) params[k].value->data[i] += step * dir[k][i];
    };
    shift(h);
    const double lp = loss();
    shift(-2 * h);
    const double lm = loss();
    shift(h);
    const double numeric = (lp - lm) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic) / std::max(std::abs(numeric), 1e-12));
  }
  const double elapsed = seconds_since(t0);
  c.expect(worst < kGradRelTol, "max relative error " + fmt(worst));
  c.expect(elapsed < kGradBudgetS, "took " + fmt(elapsed) + " s");
  c.note("max rel err " + fmt(worst));
  return c.done();
}

RunConfig reduced_config(const fs::path& out, const SpectrogramConfig& spec) {
  RunConfig rc;
  rc.out_dir = out;
  rc.spectrogram = spec;
  rc.model.backbone.width = 8;
  rc.model.backbone.blocks = {1, 1, 1, 1};
  rc.augment.crop_rows = spec.output_rows;
  rc.augment.crop_cols = spec.output_rows;
  rc.schedule.initial_lr = 1e-3;
  rc.schedule.batch_size = 8;
  rc.verbose = false;
  return rc;
}

Outcome criterion7(const fs::path& work) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const SpectrogramConfig spec;

  SynthOptions base_opts;
  base_opts.num_classes = 2;
  base_opts.per_class = 10;
  base_opts.negatives_per_positive = 2;
  base_opts.seed = 71;
  base_opts.duration_s = 0.5;
  base_opts.spectrogram = spec;
  const auto base_data = synth_dataset(work / "c7_base_data", base_opts);

  auto base_cfg = reduced_config(work / "c7_base", spec);
  base_cfg.manifest = base_data.manifest;
  base_cfg.expected_base_classes = 3;
  base_cfg.base.negatives_per_epoch = 10;
  base_cfg.schedule.max_epochs = kOverfitEpochs;
  base_cfg.schedule.restarts = 0;
  base_cfg.seed = 7;
  const auto base = cmd_train_base(base_cfg, nullptr);
  double best_train = 0;
  int hit_epoch = -1;
  for (const auto& e : base.report.epochs) {
    best_train = std::max(best_train, e.train_accuracy);
    if (hit_epoch < 0 && e.train_accuracy >= kOverfitAccuracy) hit_epoch = e.epoch;
  }
  c.expect(static_cast<int>(base.report.epochs.size()) <= kOverfitEpochs, "base ran past the epoch ceiling");
  c.expect(hit_epoch >= 0, "base train accuracy peaked at " + fmt(best_train));
  c.note("base reached " + fmt(kOverfitAccuracy) + " train accuracy at epoch " + std::to_string(hit_epoch));

  SynthOptions target_opts = base_opts;
  target_opts.num_classes = 3;
  target_opts.per_class = 30;
  target_opts.negatives_per_positive = 1;
  target_opts.seed = 72;
  target_opts.class_prefix = "target";
  const auto target_data = synth_dataset(work / "c7_target_data", target_opts);

  auto tcfg = reduced_config(work / "c7_transfer", spec);
  tcfg.manifest = target_data.manifest;
  tcfg.base_checkpoint = base.checkpoint;
  tcfg.expected_base_classes = 3;
  tcfg.target.negatives_per_epoch = 20;
  tcfg.folds = 3;
  tcfg.fold_seeds = {1, 2, 3};
  tcfg.schedule.max_epochs = 15;
  tcfg.schedule.plateau_patience = 4;
  tcfg.schedule.abort_patience = 8;
  tcfg.schedule.restarts = 0;
  const auto transfer = cmd_transfer(tcfg, nullptr);
  c.expect(transfer.report.folds.size() == 3, "expected 3 folds");
  c.expect(transfer.report.mean_accuracy >= kTransferAccuracy,
           "transfer mean test accuracy " + fmt(transfer.report.mean_accuracy));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < kTrainingBudgetS, "took " + fmt(elapsed) + " s");
  c.note("transfer mean accuracy " + fmt(transfer.report.mean_accuracy) + " +- " +
         fmt(transfer.report.std_accuracy) + ", " + fmt(elapsed) + " s");
  return c.done();
}

Outcome criterion8(const fs::path&) {
  Check c;
  c.expect(window_origins(512) == std::vector<int>{0, 128, 256}, "512-column origins");
  c.expect(window_origins(256) == std::vector<int>{0}, "256-column origins");
  c.expect(window_origins(700) == std::vector<int>{0, 128, 256, 384, 444}, "700-column origins");
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> len(1, 3000);
  for (int i = 0; i < 200; ++i) {
    const int cols = len(rng);
    const auto o = window_origins(cols);
    // every column covered, no window past the end (unless the image is narrow)
    std::vector<bool> seen(cols, false);
    for (int s : o)
      for (int j = s; j < std::min(cols, s + 256); ++j) seen[j] = true;
    c.expect(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }), "uncovered column");
    c.expect(cols < 256 ? o == std::vector<int>{0} : o.back() + 256 == cols, "last window not flush right");
  }

  auto net = build_model<float>(bxtest::tiny_model(3), std::nullopt, 8);
  GraySpectrogram g;
  g.pixels = Grid<std::uint8_t>(64, 150);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& v : g.pixels.data) v = static_cast<std::uint8_t>(px(rng));
  const auto pred = predict_clip(net, g, 64, 32);
  c.expect(pred.per_window_scores.size() == pred.window_origins.size(), "per-window rows mismatch");
  for (int k = 0; k < 3; ++k) {
    float m = 0;
    for (const auto& row : pred.per_window_scores) m = std::max(m, row[k]);
    c.expect(pred.scores[k] == m, "clip score is not the window maximum");
  }
  return c.done();
}

Outcome criterion9(const fs::path&) {
  Check c;
  std::mt19937_64 rng(909);
  std::vector<ConfusionMatrix> ms;
  for (int f = 0; f < 5; ++f) {
    std::uniform_int_distribution<int> cls(0, 5);
    std::vector<int> p(300), t(300);
    for (int i = 0; i < 300; ++i) {
      t[i] = i % 6;
      p[i] = cls(rng);
    }
    const auto m = confusion_matrix(p, t, 6);
    const double acc = accuracy(p, t);
    c.expect(static_cast<double>(m.trace()) / static_cast<double>(m.total()) == acc, "trace/total != accuracy");
    long long correct = 0;
    for (int i = 0; i < 300; ++i) correct += p[i] == t[i];
    c.expect(acc == static_cast<double>(correct) / 300.0, "accuracy mismatch");
    ms.push_back(m);
  }
  const auto avg = average_folds(ms);
  for (const auto& row : avg.normalized) {
    double s = 0;
    for (double v : row) s += v;
    c.expect(std::abs(s - 1.0) <= kRowSumTol, "averaged row sums to " + fmt(s));
  }
  std::vector<SampleRecord> recs(351);
  for (int i = 0; i < 351; ++i) recs[i] = {"r" + std::to_string(i), 0, Role::kPositive, "a"};
  const std::vector<double> fr{0.72, 0.18, 0.10};
  const auto counts = split_dataset(recs, fr, 3).counts(3);
  c.expect(counts == std::vector<std::size_t>{253, 63, 35}, "351 split as " + std::to_string(counts[0]) + "/" +
                                                                 std::to_string(counts[1]) + "/" +
                                                                 std::to_string(counts[2]));
  return c.done();
}

std::map<std::string, std::string> png_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".png") out[e.path().filename().string()] = bxtest::read_bytes(e.path());
  return out;
}

Outcome criterion10(const fs::path& work) {
  Check c;
  auto net = build_model<float>(bxtest::tiny_model(3), std::nullopt, 10);
  CheckpointMetadata meta;
  meta.class_names = {"a", "b", "negative"};
  meta.model = net.config();
  const auto path = work / "c10.ckpt";
  save_checkpoint(net, meta, path);
  auto loaded = load_checkpoint(path);
  Tensor<float> batch(2, 1, 64, 64);
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : batch.data) v = u(rng);
  c.expect(net.forward(batch, Mode::kEval) == loaded.net.forward(batch, Mode::kEval), "reloaded scores differ");
  c.expect(loaded.meta.class_names == meta.class_names, "class names lost");

  SynthOptions so;
  so.num_classes = 2;
  so.per_class = 3;
  so.negatives_per_positive = 1;
  so.duration_s = 0.5;
  so.write_audio = true;
  so.seed = 11;
  const auto synth = synth_dataset(work / "c10_audio", so);
  RunConfig rc;
  rc.audio_manifest = synth.audio_manifest;
  rc.verbose = false;
  rc.out_dir = work / "c10_prep_a";
  const auto first = cmd_prepare(rc, nullptr);
  const auto bytes_a = png_bytes(rc.out_dir);
  const auto manifest_a = bxtest::read_bytes(first.manifest);
  const auto again = cmd_prepare(rc, nullptr);
  c.expect(png_bytes(rc.out_dir) == bytes_a, "rerun changed PNG bytes");
  c.expect(bxtest::read_bytes(again.manifest) == manifest_a, "rerun changed the manifest");
  rc.out_dir = work / "c10_prep_b";
  cmd_prepare(rc, nullptr);
  c.expect(png_bytes(rc.out_dir) == bytes_a, "fresh run produced different PNG bytes");
  c.expect(bytes_a.size() == 12, "expected 12 spectrograms, got " + std::to_string(bytes_a.size()));
  return c.done();
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "birdxfer_acceptance";
  std::error_code ec;
  fs::remove_all(work, ec);
  fs::create_directories(work);

  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::stoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome(const fs::path&)>>> criteria{
      {"STFT matches direct DFT", criterion1},
      {"spectrogram geometry", criterion2},
      {"learning-rate policy on a flat loss", criterion3},
      {"training view shape and range", criterion4},
      {"ResNet-50 shapes and head swap", criterion5},
      {"conversion and head gradients", criterion6},
      {"reduced training and transfer", criterion7},
      {"sliding-window inference", criterion8},
      {"evaluation arithmetic and splits", criterion9},
      {"checkpoint and prepare determinism", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second(work);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first;
    if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
