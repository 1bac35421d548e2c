#pragma once

#include <optional>

#include "mfpq/errors.hpp"
#include "mfpq/neuron_config.hpp"
#include "mfpq/quantize.hpp"
#include "mfpq/types.hpp"

namespace mfpq {

// Stored membrane potential; after a spike it holds v_reset, otherwise the
// presynaptic value H.
template <typename S>
struct LIFState {
  MatrixR<S> u;

  LIFState(Index batch, Index features) : u(MatrixR<S>::Zero(batch, features)) {}
};

template <typename S>
struct LifStepResult {
  MatrixR<S> spikes;
  MatrixR<S> pre_activation;  // H, before reset
};

// H = tau*u + I; spike iff H >= v_th (Heaviside with theta(0) = 1);
// u' = H where silent, v_reset where fired.
template <typename S>
LifStepResult<S> lif_step(LIFState<S>& state, const MatrixR<S>& input_current,
                          const NeuronConfig<S>& cfg) {
  if (input_current.rows() != state.u.rows() || input_current.cols() != state.u.cols())
    throw ShapeError("lif_step: input and state shapes differ");
  LifStepResult<S> out;
  out.pre_activation = cfg.tau * state.u + input_current;
  out.spikes = (out.pre_activation.array() >= cfg.v_th)
                   .select(MatrixR<S>::Ones(state.u.rows(), state.u.cols()),
                           MatrixR<S>::Zero(state.u.rows(), state.u.cols()));
  state.u = (out.pre_activation.array() >= cfg.v_th)
                .select(MatrixR<S>::Constant(state.u.rows(), state.u.cols(), cfg.v_reset),
                        out.pre_activation);
  return out;
}

// Same dynamics with the stored membrane re-quantized after every update.
// Ties round toward zero here: iterated decay then behaves like a right
// shift of the stored level index (tau = 1/2 maps level k to floor(k/2)),
// which is what lets a low-bit membrane flush to zero instead of sticking
// at the tie point.
template <typename S>
LifStepResult<S> qlif_step(LIFState<S>& state, const MatrixR<S>& input_current,
                           const NeuronConfig<S>& cfg, const QuantSpec<S>& membrane_spec) {
  if (cfg.membrane_bits < 2)
    throw ConfigError("qlif_step: membrane_bits must be >= 2");
  LifStepResult<S> out = lif_step(state, input_current, cfg);
  for (Index r = 0; r < state.u.rows(); ++r)
    for (Index c = 0; c < state.u.cols(); ++c)
      state.u(r, c) = quantize_uniform(state.u(r, c), membrane_spec, TieMode::kTowardZero);
  return out;
}

}  // namespace mfpq
