#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace risvr {

/// Dense row-major 2-D array. Used for B x U link quantities (rates,
/// weights, LoS flags) where B indexes RIS and U indexes users.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return v_.empty(); }

  T& at(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return v_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& at(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return v_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::vector<T>& data() { return v_; }
  const std::vector<T>& data() const { return v_; }

  bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<T> v_;
};

}  // namespace risvr
