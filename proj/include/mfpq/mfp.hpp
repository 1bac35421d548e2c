#pragma once

#include <string>

#include "mfpq/binary_linear.hpp"
#include "mfpq/errors.hpp"
#include "mfpq/lower_triangular.hpp"
#include "mfpq/matmul.hpp"
#include "mfpq/neuron_config.hpp"
#include "mfpq/quantize.hpp"
#include "mfpq/tensor.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Learnable lower-triangular T x T mix: row t weights the synaptic currents
// of timesteps 1..t. Row t of (M * Hbar) replaces the recursive membrane
// update, so no membrane potential is ever stored.
template <typename S>
struct TemporalMixMatrix {
  LowerTriangular<S> tri;

  TemporalMixMatrix() = default;
  explicit TemporalMixMatrix(Index order) : tri(order) {}

  Index order() const { return tri.order(); }

  // Diagonal 1, sub-diagonal tau0^(t-i): matches LIF decay at init.
  static TemporalMixMatrix lif_like(Index order, S tau0 = S(0.5)) {
    TemporalMixMatrix m(order);
    for (Index t = 0; t < order; ++t) {
      m.tri(t, t) = S(1);
      S w(1);
      for (Index i = t - 1; i >= 0; --i) {
        w *= tau0;
        m.tri(t, i) = w;
      }
    }
    return m;
  }
};

// Weights in the form the engines consume: W^T as a dense (in, out) matrix
// (+/-1 for binary layers) plus the shared scale.
template <typename S>
struct EffectiveWeights {
  MatrixR<S> wt;
  S alpha;
};

template <typename S>
struct LayerForward {
  TimeTensor<S> current;         // Hbar = S_in W^T, per timestep
  TimeTensor<S> pre_activation;  // H = alpha * (M Hbar)
  TimeTensor<S> spikes;          // binary, as reals
};

template <typename S>
MatrixR<S> threshold_spikes(const Eigen::Ref<const MatrixR<S>>& h, S v_th) {
  return (h.array() >= v_th)
      .select(MatrixR<S>::Ones(h.rows(), h.cols()),
              MatrixR<S>::Zero(h.rows(), h.cols()));
}

// One layer of the parallel path: a single batched matmul for the synaptic
// currents, one small matmul across the time axis for the mixing, then the
// threshold. Keeps everything a backward pass needs.
template <typename S>
LayerForward<S> mfp_parallel_forward(const EffectiveWeights<S>& w,
                                     const TemporalMixMatrix<S>& mix,
                                     const TimeTensor<S>& input,
                                     const NeuronConfig<S>& cfg) {
  if (mix.order() != input.t_steps())
    throw ShapeError("mfp_parallel_forward: mix order " + std::to_string(mix.order()) +
                     " != t_steps " + std::to_string(input.t_steps()));
  if (input.features() != w.wt.rows())
    throw ShapeError("mfp_parallel_forward: input features " +
                     std::to_string(input.features()) + " != weight fan-in " +
                     std::to_string(w.wt.rows()));
  const Index t = input.t_steps(), b = input.batch(), n = w.wt.cols();
  LayerForward<S> out{TimeTensor<S>(t, b, n), TimeTensor<S>(t, b, n), TimeTensor<S>(t, b, n)};
  matmul_into<S>(input.rows(), w.wt, out.current.rows());
  const MatrixR<S> m_dense = mix.tri.dense();
  matmul_into<S>(m_dense, out.current.time_major(), out.pre_activation.time_major());
  out.pre_activation.rows() *= w.alpha;
  out.spikes.rows() = threshold_spikes<S>(out.pre_activation.rows(), cfg.v_th);
  return out;
}

// Serial-inference state: T running accumulators per neuron, nothing else.
// acc row j collects tau_{j,i} * Hbar[i] as inputs arrive, so by the time
// the cursor reaches j the row equals row j of M * Hbar exactly.
template <typename S>
class StreamingState {
 public:
  StreamingState() = default;
  StreamingState(Index t_steps, Index batch, Index features)
      : acc_(MatrixR<S>::Zero(t_steps, batch * features)),
        batch_(batch), features_(features) {}

  Index cursor() const { return cursor_; }
  Index t_steps() const { return acc_.rows(); }
  Index batch() const { return batch_; }
  Index features() const { return features_; }

  // Structural memory accounting: the whole point is the zero below.
  Index accumulator_scalars() const { return acc_.size(); }
  Index membrane_scalars() const { return 0; }

  MatrixR<S>& acc() { return acc_; }
  void advance() { ++cursor_; }

 private:
  MatrixR<S> acc_;
  Index batch_ = 0, features_ = 0;
  Index cursor_ = 0;
};

template <typename S>
struct StepResult {
  MatrixR<S> spikes;          // (B, N)
  MatrixR<S> pre_activation;  // alpha * acc[t], (B, N)
};

// Incremental evaluation of the memory-free update; bit-identical to the
// parallel path because both accumulate the time sum left to right with the
// same kernel expression.
template <typename S>
StepResult<S> mfp_streaming_step(StreamingState<S>& state, const EffectiveWeights<S>& w,
                                 const TemporalMixMatrix<S>& mix,
                                 const Eigen::Ref<const MatrixR<S>>& input_spikes_t,
                                 const NeuronConfig<S>& cfg, Index t) {
  if (t != state.cursor())
    throw SequencingError("mfp_streaming_step: step " + std::to_string(t) +
                          " out of order (cursor at " + std::to_string(state.cursor()) + ")");
  if (t >= state.t_steps())
    throw SequencingError("mfp_streaming_step: step " + std::to_string(t) +
                          " past horizon " + std::to_string(state.t_steps()));
  const Index b = state.batch(), n = state.features();
  MatrixR<S> hbar = matmul<S>(input_spikes_t, w.wt);
  ConstMapMatrixR<S> hrow(hbar.data(), 1, b * n);
  for (Index j = t; j < state.t_steps(); ++j) {
    state.acc().row(j) += mix.tri(j, t) * hrow.row(0);
  }
  StepResult<S> out;
  MatrixR<S> h_t = state.acc().row(t);
  h_t *= w.alpha;
  out.pre_activation = MapMatrixR<S>(h_t.data(), b, n);
  out.spikes = threshold_spikes<S>(out.pre_activation, cfg.v_th);
  state.advance();
  return out;
}

// Literal folded-threshold rule: stateless, the spike at t depends only on
// the current synaptic input and a precomputed per-step threshold.
template <typename S>
MatrixR<S> mfp_folded_step(const EffectiveWeights<S>& w, const FoldedThresholds<S>& folded,
                           const Eigen::Ref<const MatrixR<S>>& input_spikes_t, Index t) {
  if (t < 0 || static_cast<std::size_t>(t) >= folded.per_step.size())
    throw SequencingError("mfp_folded_step: step " + std::to_string(t) +
                          " out of range [0, " + std::to_string(folded.per_step.size()) + ")");
  MatrixR<S> hbar = matmul<S>(input_spikes_t, w.wt);
  return threshold_spikes<S>(hbar, folded.per_step[static_cast<std::size_t>(t)]);
}

}  // namespace mfpq
