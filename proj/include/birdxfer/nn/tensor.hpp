#pragma once

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace birdxfer::nn {

// 64-byte aligned storage. Vectorized kernels peel differently depending on
// the start address, so unaligned buffers make float results vary from run
// to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense NCHW tensor. Vectors and matrices use h = w = 1.
template <typename T>
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  AlignedVector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T{})
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_stride() const { return static_cast<std::size_t>(c) * h * w; }
  T* sample(int i) { return data.data() + i * sample_stride(); }
  const T* sample(int i) const { return data.data() + i * sample_stride(); }
  T& at(int in, int ic, int ih, int iw) {
    return data[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  const T& at(int in, int ic, int ih, int iw) const {
    return data[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_string() const;
  void zero();

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& t) {
  return Tensor<T>(t.n, t.c, t.h, t.w);
}

enum class Mode { kTrain, kEval };

// Reference to a named array owned by a layer. grad is null for buffers
// (batch-norm running statistics).
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

template <typename T>
struct TensorRegistry {
  std::vector<NamedTensor<T>> params;
  std::vector<NamedTensor<T>> buffers;
};

extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace birdxfer::nn
