#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mfpq/errors.hpp"
#include "mfpq/lower_triangular.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Symmetric uniform quantizer: levels alpha * {0, +/-1/q, ..., +/-1} with
// q = 2^(b-1) - 1. b = 1 makes q zero and is rejected; one-bit weights go
// through the sign binarizer instead.
template <typename S>
struct QuantSpec {
  int bits;
  S alpha;

  QuantSpec(int bits_in, S alpha_in) : bits(bits_in), alpha(alpha_in) {
    if (bits < 2)
      throw ConfigError("quantize: unsupported bit width " + std::to_string(bits) +
                        " (need bits >= 2)");
    if (!(alpha > S(0)) || !std::isfinite(static_cast<double>(alpha)))
      throw ConfigError("quantize: scale must be finite and positive");
  }

  long levels() const { return (1l << (bits - 1)) - 1; }
  S level(long k) const { return alpha * (static_cast<S>(k) / static_cast<S>(levels())); }
  S gap() const { return alpha / static_cast<S>(levels()); }
};

// Tie handling when a value sits exactly between two levels. The exposed
// quantizer rounds away from zero; the quantized-membrane decay path rounds
// toward zero, which is what an integer right shift of the stored magnitude
// does.
enum class TieMode { kAwayFromZero, kTowardZero };

template <typename S>
S quantize_uniform(S x, const QuantSpec<S>& spec, TieMode tie = TieMode::kAwayFromZero) {
  const long q = spec.levels();
  // Index guess, then exact nearest-level search over the guess's neighbors
  // so the result agrees with a brute-force scan of the materialized levels.
  const double approx = static_cast<double>(x) / static_cast<double>(spec.alpha) *
                        static_cast<double>(q);
  long k0 = static_cast<long>(std::floor(approx)) - 1;
  long best = 0;
  bool have = false;
  S best_dist(0);
  for (long k = k0; k <= k0 + 3; ++k) {
    const long kc = k < -q ? -q : (k > q ? q : k);
    const S dist = std::abs(x - spec.level(kc));
    const bool better =
        !have || dist < best_dist ||
        (dist == best_dist && (tie == TieMode::kAwayFromZero
                                   ? std::labs(kc) > std::labs(best)
                                   : std::labs(kc) < std::labs(best)));
    if (better) {
      best = kc;
      best_dist = dist;
      have = true;
    }
  }
  return spec.level(best);
}

// Straight-through estimator for the sign binarizer: pass the upstream
// gradient where |latent| <= clip (boundary inclusive), zero elsewhere.
template <typename S>
MatrixR<S> ste_grad(const MatrixR<S>& upstream, const MatrixR<S>& latent, S clip = S(1)) {
  if (upstream.rows() != latent.rows() || upstream.cols() != latent.cols())
    throw ShapeError("ste_grad: upstream and latent shapes differ");
  return (latent.array().abs() <= clip).select(upstream, MatrixR<S>::Zero(upstream.rows(), upstream.cols()));
}

enum class FoldMode { kExactStreaming, kFoldedDiagonal, kFoldedRowsum };

inline const char* fold_mode_name(FoldMode m) {
  switch (m) {
    case FoldMode::kExactStreaming: return "exact-streaming";
    case FoldMode::kFoldedDiagonal: return "folded-diagonal";
    case FoldMode::kFoldedRowsum: return "folded-rowsum";
  }
  return "?";
}

// Per-timestep firing thresholds with the mix inverse and weight scale
// absorbed, so serial inference compares raw currents against a constant.
template <typename S>
struct FoldedThresholds {
  std::vector<S> per_step;
  FoldMode mode = FoldMode::kFoldedDiagonal;
};

template <typename S>
FoldedThresholds<S> fold_thresholds(const LowerTriangular<S>& m, S v_th, S alpha,
                                    FoldMode mode) {
  if (!(alpha > S(0)))
    throw ConfigError("fold_thresholds: invalid scale alpha <= 0");
  if (mode == FoldMode::kExactStreaming)
    throw ConfigError("fold_thresholds: exact-streaming has no folded thresholds");
  const LowerTriangular<S> inv = tri_invert(m);
  FoldedThresholds<S> out;
  out.mode = mode;
  out.per_step.resize(static_cast<std::size_t>(m.order()));
  for (Index i = 0; i < m.order(); ++i) {
    const S agg = mode == FoldMode::kFoldedDiagonal ? inv(i, i) : inv.row_sum(i);
    out.per_step[static_cast<std::size_t>(i)] = v_th * agg / alpha;
  }
  return out;
}

}  // namespace mfpq
