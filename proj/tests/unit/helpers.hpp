#pragma once

#include <vector>

#include "ulsa/tensor.hpp"

inline std::vector<double> as_vec(const ulsa::Tensor& t) {
  return {t.values().begin(), t.values().end()};
}
