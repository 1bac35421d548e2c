#pragma once

#include <string>
#include <vector>

#include "mfpq/errors.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Lower-triangular matrix stored packed row-wise: row i holds i+1 entries at
// offset i*(i+1)/2. Entries above the diagonal are unrepresentable.
template <typename S>
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(Index order)
      : order_(order), packed_(static_cast<std::size_t>(order * (order + 1) / 2), S(0)) {}

  static LowerTriangular identity(Index order) {
    LowerTriangular m(order);
    for (Index i = 0; i < order; ++i) m(i, i) = S(1);
    return m;
  }

  // Copies the lower triangle; the upper triangle of `d` is ignored.
  static LowerTriangular from_dense(const MatrixR<S>& d) {
    LowerTriangular m(d.rows());
    for (Index i = 0; i < d.rows(); ++i)
      for (Index j = 0; j <= i; ++j) m(i, j) = d(i, j);
    return m;
  }

  Index order() const { return order_; }

  S operator()(Index i, Index j) const {
    return j > i ? S(0) : packed_[offset(i) + static_cast<std::size_t>(j)];
  }
  S& operator()(Index i, Index j) {
    if (j > i) throw ShapeError("lower_triangular: write above diagonal");
    return packed_[offset(i) + static_cast<std::size_t>(j)];
  }

  std::vector<S>& packed() { return packed_; }
  const std::vector<S>& packed() const { return packed_; }

  MatrixR<S> dense() const {
    MatrixR<S> d = MatrixR<S>::Zero(order_, order_);
    for (Index i = 0; i < order_; ++i)
      for (Index j = 0; j <= i; ++j) d(i, j) = (*this)(i, j);
    return d;
  }

  // Sum over row i, ascending column order.
  S row_sum(Index i) const {
    S s(0);
    for (Index j = 0; j <= i; ++j) s += (*this)(i, j);
    return s;
  }

 private:
  static std::size_t offset(Index i) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(i + 1) / 2;
  }

  Index order_ = 0;
  std::vector<S> packed_;
};

// Inverse by forward substitution, column by column. Requires a nonzero
// diagonal; reports the first offending row otherwise.
template <typename S>
LowerTriangular<S> tri_invert(const LowerTriangular<S>& m) {
  const Index n = m.order();
  for (Index i = 0; i < n; ++i) {
    if (m(i, i) == S(0)) {
      throw SingularMatrixError(
          "tri_invert: zero diagonal entry at row " + std::to_string(i), i);
    }
  }
  LowerTriangular<S> inv(n);
  for (Index j = 0; j < n; ++j) {
    inv(j, j) = S(1) / m(j, j);
    for (Index i = j + 1; i < n; ++i) {
      S acc(0);
      for (Index k = j; k < i; ++k) acc += m(i, k) * inv(k, j);
      inv(i, j) = -acc / m(i, i);
    }
  }
  return inv;
}

}  // namespace mfpq
