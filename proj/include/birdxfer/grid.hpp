#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "birdxfer/error.hpp"

namespace birdxfer {

// Row-major 2D array.
template <typename T>
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int r, int c, T fill = T{})
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  bool empty() const { return data.empty(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Bilinear resampling with half-pixel centres: source coordinate
// (dst + 0.5) * in / out - 0.5, clamped to the valid range. Same-size output
// reproduces the input exactly.
template <typename Out, typename In>
Grid<Out> resize_bilinear(const Grid<In>& src, int out_rows, int out_cols) {
  if (src.rows < 1 || src.cols < 1 || out_rows < 1 || out_cols < 1) {
    throw InvalidArgument("resize_bilinear: empty grid");
  }
  Grid<Out> dst(out_rows, out_cols);
  auto axis = [](int out, int in, std::vector<int>& i0, std::vector<double>& frac) {
    i0.resize(out);
    frac.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      int lo = static_cast<int>(std::floor(s));
      if (lo >= in - 1) lo = std::max(in - 2, 0);
      i0[d] = lo;
      frac[d] = in == 1 ? 0.0 : s - lo;
    }
  };
  std::vector<int> r0, c0;
  std::vector<double> rf, cf;
  axis(out_rows, src.rows, r0, rf);
  axis(out_cols, src.cols, c0, cf);
  for (int r = 0; r < out_rows; ++r) {
    const int ra = r0[r];
    const int rb = std::min(ra + 1, src.rows - 1);
    const double wr = rf[r];
    for (int c = 0; c < out_cols; ++c) {
      const int ca = c0[c];
      const int cb = std::min(ca + 1, src.cols - 1);
      const double wc = cf[c];
      const double top = (1.0 - wc) * src.at(ra, ca) + wc * src.at(ra, cb);
      const double bottom = (1.0 - wc) * src.at(rb, ca) + wc * src.at(rb, cb);
      const double v = wr == 0.0 ? top : (1.0 - wr) * top + wr * bottom;
      dst.at(r, c) = static_cast<Out>(wc == 0.0 && wr == 0.0 ? static_cast<double>(src.at(ra, ca)) : v);
    }
  }
  return dst;
}

}  // namespace birdxfer
