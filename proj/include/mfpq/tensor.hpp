#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfpq/errors.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Real-valued (T, B, N) tensor in one row-major buffer. The same memory is
// exposed as (T*B) x N rows (synaptic matmul) and as T x (B*N) rows
// (temporal mixing), so no reshaping ever copies or reorders values.
template <typename S>
class TimeTensor {
 public:
  TimeTensor() = default;
  TimeTensor(Index t, Index b, Index n)
      : t_(t), b_(b), n_(n), flat_(MatrixR<S>::Zero(t * b, n)) {}

  Index t_steps() const { return t_; }
  Index batch() const { return b_; }
  Index features() const { return n_; }

  MatrixR<S>& rows() { return flat_; }
  const MatrixR<S>& rows() const { return flat_; }

  MapMatrixR<S> time_major() {
    return MapMatrixR<S>(flat_.data(), t_, b_ * n_);
  }
  ConstMapMatrixR<S> time_major() const {
    return ConstMapMatrixR<S>(flat_.data(), t_, b_ * n_);
  }

  // (B, N) block for one timestep; contiguous, no copy.
  MapMatrixR<S> step(Index t) {
    return MapMatrixR<S>(flat_.data() + t * b_ * n_, b_, n_);
  }
  ConstMapMatrixR<S> step(Index t) const {
    return ConstMapMatrixR<S>(flat_.data() + t * b_ * n_, b_, n_);
  }

  bool all_finite() const { return flat_.allFinite(); }

 private:
  Index t_ = 0, b_ = 0, n_ = 0;
  MatrixR<S> flat_;
};

// Binary activations over (T, B, N), bit-packed LSB-first in one flat
// bitstream. The record type for spike trains: engines compute on real
// tensors and pack/unpack at the boundaries.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  SpikeTrain(Index t, Index b, Index n)
      : t_(t), b_(b), n_(n),
        bits_(static_cast<std::size_t>((t * b * n + 7) / 8), 0) {}

  Index t_steps() const { return t_; }
  Index batch() const { return b_; }
  Index features() const { return n_; }
  Index size() const { return t_ * b_ * n_; }

  bool get(Index t, Index b, Index n) const { return get_flat((t * b_ + b) * n_ + n); }
  void set(Index t, Index b, Index n, bool v) { set_flat((t * b_ + b) * n_ + n, v); }

  bool get_flat(Index i) const {
    return (bits_[static_cast<std::size_t>(i >> 3)] >> (i & 7)) & 1;
  }
  void set_flat(Index i, bool v) {
    auto& byte = bits_[static_cast<std::size_t>(i >> 3)];
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (i & 7));
    byte = v ? (byte | mask) : (byte & static_cast<std::uint8_t>(~mask));
  }

  Index count() const {
    Index c = 0;
    for (Index i = 0; i < size(); ++i) c += get_flat(i) ? 1 : 0;
    return c;
  }

  const std::vector<std::uint8_t>& bytes() const { return bits_; }

  template <typename S>
  TimeTensor<S> to_real() const {
    TimeTensor<S> out(t_, b_, n_);
    S* p = out.rows().data();
    for (Index i = 0; i < size(); ++i) p[i] = get_flat(i) ? S(1) : S(0);
    return out;
  }

  template <typename S>
  static SpikeTrain from_real(const TimeTensor<S>& x) {
    SpikeTrain out(x.t_steps(), x.batch(), x.features());
    const S* p = x.rows().data();
    for (Index i = 0; i < out.size(); ++i) out.set_flat(i, p[i] != S(0));
    return out;
  }

  bool operator==(const SpikeTrain& o) const {
    return t_ == o.t_ && b_ == o.b_ && n_ == o.n_ && bits_ == o.bits_;
  }

 private:
  Index t_ = 0, b_ = 0, n_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace mfpq
