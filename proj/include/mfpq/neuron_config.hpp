#pragma once

#include <string>

#include "mfpq/errors.hpp"

namespace mfpq {

// Scalar hyperparameters of the neuron dynamics. membrane_bits = 0 means a
// full-precision membrane (quantized engine rejects it).
template <typename S>
struct NeuronConfig {
  S tau = S(0.5);
  S v_th = S(1);
  S v_reset = S(0);
  int membrane_bits = 0;
  int weight_bits = 1;

  void validate() const {
    if (!(tau > S(0)) || tau > S(1))
      throw ConfigError("neuron.tau must lie in (0, 1], got " + std::to_string(tau));
    if (!(v_th > S(0)))
      throw ConfigError("neuron.v_th must be positive");
    if (!(v_th > v_reset))
      throw ConfigError("neuron.v_th must exceed neuron.v_reset");
    if (membrane_bits != 0 && membrane_bits < 2)
      throw ConfigError("neuron.membrane_bits must be >= 2 when set");
    if (weight_bits != 1 && weight_bits != 32)
      throw ConfigError("neuron.weight_bits must be 1 or 32");
  }
};

}  // namespace mfpq
