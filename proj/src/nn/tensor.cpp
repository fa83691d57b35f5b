#include "birdxfer/nn/tensor.hpp"

#include <algorithm>

namespace birdxfer::nn {

template <typename T>
std::string Tensor<T>::shape_string() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

template <typename T>
void Tensor<T>::zero() {
  std::fill(data.begin(), data.end(), T{});
}

template struct Tensor<float>;
template struct Tensor<double>;

}  // namespace birdxfer::nn
