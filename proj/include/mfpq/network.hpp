#pragma once

#include <string>
#include <vector>

#include "mfpq/binary_linear.hpp"
#include "mfpq/errors.hpp"
#include "mfpq/mfp.hpp"
#include "mfpq/rng.hpp"
#include "mfpq/tensor.hpp"

namespace mfpq {

template <typename S>
struct Layer {
  int weight_bits = 1;       // 1 (sign + scale) or 32 (dense)
  MatrixR<S> latent;         // (out, in) full-precision weights
  TemporalMixMatrix<S> mix;  // order = t_steps
  NeuronConfig<S> cfg;

  Index fan_in() const { return latent.cols(); }
  Index fan_out() const { return latent.rows(); }
};

// Signs are re-derived from the latent weights on every use, so a trainer
// only ever touches the latent matrix.
template <typename S>
EffectiveWeights<S> effective_weights(const Layer<S>& layer) {
  if (layer.weight_bits == 1) {
    const BinaryLinear<S> b = binarize(layer.latent);
    return {b.sign_matrix_t(), b.alpha()};
  }
  return {layer.latent.transpose(), S(1)};
}

template <typename S>
struct Network {
  Index input_dim = 0;
  Index t_steps = 0;
  std::vector<Layer<S>> layers;

  Index output_dim() const { return layers.empty() ? 0 : layers.back().fan_out(); }

  void validate() const {
    if (layers.empty()) throw ConfigError("network: needs at least one layer");
    if (t_steps < 1) throw ConfigError("network: t_steps must be >= 1");
    Index in = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      if (layer.fan_in() != in)
        throw ConfigError("network: layer " + std::to_string(l) + " fan-in " +
                          std::to_string(layer.fan_in()) + " != expected " +
                          std::to_string(in));
      if (layer.mix.order() != t_steps)
        throw ConfigError("network: layer " + std::to_string(l) + " mix order " +
                          std::to_string(layer.mix.order()) + " != t_steps " +
                          std::to_string(t_steps));
      layer.cfg.validate();
      in = layer.fan_out();
    }
  }
};

// Latent weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], mixes at the
// LIF-like init; fully determined by the seed.
template <typename S>
Network<S> init_network(Index input_dim, Index t_steps, const std::vector<Index>& widths,
                        const NeuronConfig<S>& cfg, int weight_bits, std::uint64_t seed) {
  Network<S> net;
  net.input_dim = input_dim;
  net.t_steps = t_steps;
  Rng rng(mix_seed(seed, 0x11));
  Index in = input_dim;
  for (Index w : widths) {
    Layer<S> layer;
    layer.weight_bits = weight_bits;
    layer.cfg = cfg;
    layer.mix = TemporalMixMatrix<S>::lif_like(t_steps);
    layer.latent.resize(w, in);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Index r = 0; r < w; ++r)
      for (Index c = 0; c < in; ++c)
        layer.latent(r, c) = static_cast<S>(rng.uniform(-bound, bound));
    net.layers.push_back(std::move(layer));
    in = w;
  }
  net.validate();
  return net;
}

enum class ForwardMode { kParallel, kStreaming, kFoldedDiagonal, kFoldedRowsum };

inline const char* forward_mode_name(ForwardMode m) {
  switch (m) {
    case ForwardMode::kParallel: return "parallel";
    case ForwardMode::kStreaming: return "streaming";
    case ForwardMode::kFoldedDiagonal: return "folded-diag";
    case ForwardMode::kFoldedRowsum: return "folded-rowsum";
  }
  return "?";
}

// Everything a backward pass needs. Layer l's input activations are the
// previous layer's activations (or the network input for l = 0).
template <typename S>
struct ParallelCache {
  TimeTensor<S> input;
  std::vector<LayerForward<S>> layers;
  MatrixR<S> logits;  // (B, C): mean over time of final pre-activation
  bool smoothed = false;
  S smooth_width = S(1);

  const TimeTensor<S>& activations_in(std::size_t l) const {
    return l == 0 ? input : layers[l - 1].spikes;
  }
};

// Readout: mean over time of a (T, B, C) pre-activation, summed in ascending
// time order. The streaming path reproduces the identical float sequence.
template <typename S>
MatrixR<S> mean_over_time(const TimeTensor<S>& h) {
  MatrixR<S> acc = MatrixR<S>::Zero(1, h.batch() * h.features());
  auto tm = h.time_major();
  for (Index t = 0; t < h.t_steps(); ++t) acc.row(0) += tm.row(t);
  acc /= static_cast<S>(h.t_steps());
  return MapMatrixR<S>(acc.data(), h.batch(), h.features());
}

// Clipped-ramp stand-in for the Heaviside, used only by the gradient-check
// harness: output in [0, 2a], derivative the unit-height window.
template <typename S>
MatrixR<S> smoothed_activation(const MatrixR<S>& h, S v_th, S width) {
  return (h.array() - v_th + width).cwiseMax(S(0)).cwiseMin(S(2) * width).matrix();
}

// Layer-major spiking (or smoothed) forward over the whole horizon.
template <typename S>
ParallelCache<S> forward_parallel(const Network<S>& net, const TimeTensor<S>& input,
                                  bool smoothed = false, S smooth_width = S(1)) {
  ParallelCache<S> cache;
  cache.input = input;
  cache.smoothed = smoothed;
  cache.smooth_width = smooth_width;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer<S>& layer = net.layers[l];
    const EffectiveWeights<S> w = effective_weights(layer);
    LayerForward<S> fwd =
        mfp_parallel_forward(w, layer.mix, cache.activations_in(l), layer.cfg);
    if (smoothed)
      fwd.spikes.rows() =
          smoothed_activation<S>(fwd.pre_activation.rows(), layer.cfg.v_th, smooth_width);
    cache.layers.push_back(std::move(fwd));
  }
  cache.logits = mean_over_time(cache.layers.back().pre_activation);
  return cache;
}

// Timestep-major serial runner: all layers advance at step t before t+1.
// Persistent state is the per-layer accumulator matrix; no membrane buffer
// exists anywhere (see StreamingState::membrane_scalars).
template <typename S>
class StreamingRunner {
 public:
  StreamingRunner(const Network<S>& net, Index batch) : net_(&net), batch_(batch) {
    for (const Layer<S>& layer : net.layers) {
      weights_.push_back(effective_weights(layer));
      states_.emplace_back(net.t_steps, batch, layer.fan_out());
    }
    logits_acc_ = MatrixR<S>::Zero(1, batch * net.output_dim());
  }

  // Feeds one timestep of input spikes through every layer; returns each
  // layer's spikes at this step.
  std::vector<MatrixR<S>> step(const Eigen::Ref<const MatrixR<S>>& input_spikes_t, Index t) {
    std::vector<MatrixR<S>> spikes;
    MatrixR<S> act = input_spikes_t;
    for (std::size_t l = 0; l < net_->layers.size(); ++l) {
      StepResult<S> r = mfp_streaming_step(states_[l], weights_[l], net_->layers[l].mix,
                                           act, net_->layers[l].cfg, t);
      act = r.spikes;
      if (l + 1 == net_->layers.size()) {
        ConstMapMatrixR<S> row(r.pre_activation.data(), 1, logits_acc_.cols());
        logits_acc_.row(0) += row.row(0);
      }
      spikes.push_back(std::move(r.spikes));
    }
    ++steps_done_;
    return spikes;
  }

  MatrixR<S> logits() const {
    MatrixR<S> acc = logits_acc_;
    acc /= static_cast<S>(net_->t_steps);
    return MapMatrixR<S>(acc.data(), batch_, net_->output_dim());
  }

  Index accumulator_scalars() const {
    Index total = 0;
    for (const auto& s : states_) total += s.accumulator_scalars();
    return total;
  }
  Index membrane_scalars() const {
    Index total = 0;
    for (const auto& s : states_) total += s.membrane_scalars();
    return total;
  }

 private:
  const Network<S>* net_;
  Index batch_;
  std::vector<EffectiveWeights<S>> weights_;
  std::vector<StreamingState<S>> states_;
  MatrixR<S> logits_acc_;
  Index steps_done_ = 0;
};

// Timestep-major folded-threshold runner (stateless per step). The readout
// here averages the raw currents: folded mode has no mixed pre-activation
// by construction, so its logits are not comparable to the other modes.
template <typename S>
class FoldedRunner {
 public:
  FoldedRunner(const Network<S>& net, Index batch, FoldMode mode)
      : net_(&net), batch_(batch) {
    for (const Layer<S>& layer : net.layers) {
      weights_.push_back(effective_weights(layer));
      folded_.push_back(
          fold_thresholds(layer.mix.tri, layer.cfg.v_th, weights_.back().alpha, mode));
    }
    logits_acc_ = MatrixR<S>::Zero(1, batch * net.output_dim());
  }

  std::vector<MatrixR<S>> step(const Eigen::Ref<const MatrixR<S>>& input_spikes_t, Index t) {
    std::vector<MatrixR<S>> spikes;
    MatrixR<S> act = input_spikes_t;
    for (std::size_t l = 0; l < net_->layers.size(); ++l) {
      MatrixR<S> hbar = matmul<S>(act, weights_[l].wt);
      if (l + 1 == net_->layers.size()) {
        ConstMapMatrixR<S> row(hbar.data(), 1, logits_acc_.cols());
        logits_acc_.row(0) += row.row(0);
      }
      act = threshold_spikes<S>(hbar, folded_[l].per_step[static_cast<std::size_t>(t)]);
      spikes.push_back(act);
    }
    return spikes;
  }

  MatrixR<S> logits() const {
    MatrixR<S> acc = logits_acc_;
    acc /= static_cast<S>(net_->t_steps);
    return MapMatrixR<S>(acc.data(), batch_, net_->output_dim());
  }

 private:
  const Network<S>* net_;
  Index batch_;
  std::vector<EffectiveWeights<S>> weights_;
  std::vector<FoldedThresholds<S>> folded_;
  MatrixR<S> logits_acc_;
};

template <typename S>
struct NetworkOutput {
  MatrixR<S> logits;                     // (B, C)
  std::vector<SpikeTrain> layer_spikes;  // one train per layer
};

template <typename S>
NetworkOutput<S> network_forward(const Network<S>& net, const SpikeTrain& input,
                                 ForwardMode mode) {
  net.validate();
  if (input.t_steps() != net.t_steps || input.features() != net.input_dim)
    throw ShapeError("network_forward: input shaped (" + std::to_string(input.t_steps()) +
                     ", " + std::to_string(input.batch()) + ", " +
                     std::to_string(input.features()) + ") does not match network");
  const Index b = input.batch();
  NetworkOutput<S> out;
  if (mode == ForwardMode::kParallel) {
    const TimeTensor<S> x = input.to_real<S>();
    ParallelCache<S> cache = forward_parallel(net, x);
    out.logits = cache.logits;
    for (const auto& lf : cache.layers)
      out.layer_spikes.push_back(SpikeTrain::from_real(lf.spikes));
    return out;
  }
  for (const Layer<S>& layer : net.layers)
    out.layer_spikes.emplace_back(net.t_steps, b, layer.fan_out());
  const TimeTensor<S> x = input.to_real<S>();
  auto record = [&](const std::vector<MatrixR<S>>& spikes, Index t) {
    for (std::size_t l = 0; l < spikes.size(); ++l)
      for (Index bb = 0; bb < b; ++bb)
        for (Index n = 0; n < spikes[l].cols(); ++n)
          out.layer_spikes[l].set(t, bb, n, spikes[l](bb, n) != S(0));
  };
  if (mode == ForwardMode::kStreaming) {
    StreamingRunner<S> runner(net, b);
    for (Index t = 0; t < net.t_steps; ++t) record(runner.step(x.step(t), t), t);
    out.logits = runner.logits();
  } else {
    FoldedRunner<S> runner(net, b,
                           mode == ForwardMode::kFoldedDiagonal ? FoldMode::kFoldedDiagonal
                                                                : FoldMode::kFoldedRowsum);
    for (Index t = 0; t < net.t_steps; ++t) record(runner.step(x.step(t), t), t);
    out.logits = runner.logits();
  }
  return out;
}

}  // namespace mfpq
