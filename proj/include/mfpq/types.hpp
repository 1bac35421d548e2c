#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace mfpq {

using Index = Eigen::Index;

// All storage is row-major: a (T, B, N) tensor is one contiguous buffer that
// can be viewed either as (T*B) x N or as T x (B*N) without copying.
template <typename S>
using MatrixR = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
using MapMatrixR = Eigen::Map<MatrixR<S>>;

template <typename S>
using ConstMapMatrixR = Eigen::Map<const MatrixR<S>>;

}  // namespace mfpq
