#pragma once

#include <string>

#include "mfpq/errors.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Dense product with a pinned accumulation order: every output element is
// the sum over k taken strictly left to right. The serial engines replay
// the same sequence of rounded operations, so cross-mode spike comparisons
// can be exact instead of tolerance-based. Not a BLAS replacement.
template <typename S>
void matmul_into(Eigen::Ref<const MatrixR<S>> a, Eigen::Ref<const MatrixR<S>> b,
                 Eigen::Ref<MatrixR<S>> c) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " * " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
  c.setZero();
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index k = 0; k < a.cols(); ++k) {
      c.row(r) += a(r, k) * b.row(k);
    }
  }
}

template <typename S>
MatrixR<S> matmul(Eigen::Ref<const MatrixR<S>> a, Eigen::Ref<const MatrixR<S>> b) {
  MatrixR<S> c(a.rows(), b.cols());
  matmul_into<S>(a, b, c);
  return c;
}

}  // namespace mfpq
