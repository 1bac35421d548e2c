#pragma once

#include <cstdint>
#include <vector>

#include "mfpq/errors.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Sign-valued weight matrix with one shared scale. Signs live bit-packed
// (LSB-first, each row padded to a whole byte, bit 1 -> +1); that packing is
// also the checkpoint wire format. The full-precision latent weights exist
// only while training and are kept by the owning layer, not here.
template <typename S>
class BinaryLinear {
 public:
  BinaryLinear() = default;
  BinaryLinear(Index out, Index in)
      : out_(out), in_(in), row_bytes_((in + 7) / 8),
        packed_(static_cast<std::size_t>(out * row_bytes_), 0), alpha_(0) {}

  Index out_features() const { return out_; }
  Index in_features() const { return in_; }
  Index row_bytes() const { return row_bytes_; }

  S alpha() const { return alpha_; }
  void set_alpha(S a) { alpha_ = a; }

  bool positive(Index r, Index c) const {
    const std::size_t idx = static_cast<std::size_t>(r * row_bytes_ + (c >> 3));
    return (packed_[idx] >> (c & 7)) & 1;
  }
  void set_positive(Index r, Index c, bool v) {
    auto& byte = packed_[static_cast<std::size_t>(r * row_bytes_ + (c >> 3))];
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (c & 7));
    byte = v ? (byte | mask) : (byte & static_cast<std::uint8_t>(~mask));
  }

  S sign(Index r, Index c) const { return positive(r, c) ? S(1) : S(-1); }

  // Dense +/-1 matrix, (out, in).
  MatrixR<S> sign_matrix() const {
    MatrixR<S> w(out_, in_);
    for (Index r = 0; r < out_; ++r)
      for (Index c = 0; c < in_; ++c) w(r, c) = sign(r, c);
    return w;
  }

  // Dense +/-1 matrix, (in, out): the right operand of `spikes * W^T`.
  MatrixR<S> sign_matrix_t() const {
    MatrixR<S> w(in_, out_);
    for (Index r = 0; r < out_; ++r)
      for (Index c = 0; c < in_; ++c) w(c, r) = sign(r, c);
    return w;
  }

  std::vector<std::uint8_t>& packed() { return packed_; }
  const std::vector<std::uint8_t>& packed() const { return packed_; }

 private:
  Index out_ = 0, in_ = 0, row_bytes_ = 0;
  std::vector<std::uint8_t> packed_;
  S alpha_ = S(0);
};

// sign(0) = +1, alpha = mean(|latent|). An all-zero latent gives alpha = 0,
// a valid degenerate layer.
template <typename S>
BinaryLinear<S> binarize(const MatrixR<S>& latent) {
  if (latent.size() == 0) throw ShapeError("binarize: empty latent matrix");
  BinaryLinear<S> out(latent.rows(), latent.cols());
  S acc(0);
  for (Index r = 0; r < latent.rows(); ++r) {
    for (Index c = 0; c < latent.cols(); ++c) {
      out.set_positive(r, c, latent(r, c) >= S(0));
      acc += std::abs(latent(r, c));
    }
  }
  out.set_alpha(acc / static_cast<S>(latent.size()));
  return out;
}

}  // namespace mfpq
