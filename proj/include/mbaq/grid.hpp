#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mbaq/error.hpp"

namespace mbaq {

// Row-major 2-D array of per-macroblock values. The tag keeps emphasis
// levels, QPs and SSIM grids from being mixed up at compile time.
template <class T, class Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Grid(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw InvalidInput("grid data length does not match rows*cols");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  template <class U, class OtherTag>
  bool same_shape(const Grid<U, OtherTag>& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

}  // namespace mbaq
