#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaos {

// Row-major matrix of Monte Carlo samples: one row per replica, one column
// per requested time (or per vector component x time).
struct SampleMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  SampleMatrix() = default;
  SampleMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
  }
};

}  // namespace chaos
