#pragma once

#include <numeric>
#include <vector>

#include "cvrl/error.hpp"

namespace cvrl {

// Dense value array of up to 5 dimensions with an optional aligned gradient
// buffer. The reverse-mode substrate for the encoder.
template <typename S>
struct DenseArray {
  std::vector<int> shape;
  std::vector<S> values;
  std::vector<S> grad;

  static DenseArray zeros(std::vector<int> dims) {
    DenseArray a;
    a.shape = std::move(dims);
    a.values.assign(a.count(), S(0));
    return a;
  }

  std::size_t count() const {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 1) throw config_error("DenseArray: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), S(0));
  }

  void zero_grad() { grad.assign(values.size(), S(0)); }
};

}  // namespace cvrl
