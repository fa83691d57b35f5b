#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace bxtest {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(BIRDXFER_TEST_DATA) / name;
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("bxtest_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Direct O(N^2) DFT magnitude of one bin, in long double.
inline double dft_magnitude(const std::vector<double>& x, int k) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  long double re = 0.0L, im = 0.0L;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const long double angle = two_pi * static_cast<long double>(k) * static_cast<long double>(i) / n;
    re += x[i] * std::cos(angle);
    im -= x[i] * std::sin(angle);
  }
  return static_cast<double>(std::sqrt(re * re + im * im));
}

// Goertzel recurrence: one DFT bin in O(N) without trigonometry per sample.
inline double goertzel_magnitude(const std::vector<float>& x, double k) {
  const double w = 2.0 * std::numbers::pi * k / static_cast<double>(x.size());
  const double coeff = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (float v : x) {
    const double s0 = v + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double re = s1 - s2 * std::cos(w);
  const double im = s2 * std::sin(w);
  return std::sqrt(re * re + im * im);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

}  // namespace bxtest
