#pragma once

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mfpq/network.hpp"
#include "mfpq/quantize.hpp"
#include "mfpq/rng.hpp"

namespace mfpq {

// Unit-height rectangular window around the threshold. Its antiderivative is
// the clipped ramp used by the smoothed forward, so the two stay consistent
// under finite differencing. The window integrates to 2a; not normalized.
template <typename S>
struct SurrogateSpec {
  S width = S(1);
};

template <typename S>
MatrixR<S> surrogate_grad_mat(const MatrixR<S>& pre_activation, S v_th, S width) {
  return ((pre_activation.array() - v_th).abs() < width)
      .select(MatrixR<S>::Ones(pre_activation.rows(), pre_activation.cols()),
              MatrixR<S>::Zero(pre_activation.rows(), pre_activation.cols()))
      .matrix();
}

template <typename S>
TimeTensor<S> surrogate_grad(const TimeTensor<S>& pre_activation, const NeuronConfig<S>& cfg,
                             const SurrogateSpec<S>& spec) {
  if (!(spec.width > S(0))) throw ConfigError("surrogate width must be positive");
  TimeTensor<S> out(pre_activation.t_steps(), pre_activation.batch(),
                    pre_activation.features());
  out.rows() = surrogate_grad_mat<S>(pre_activation.rows(), cfg.v_th, spec.width);
  return out;
}

template <typename S>
struct LayerGrads {
  MatrixR<S> latent;       // (out, in)
  std::vector<S> mix;      // packed lower-triangular, T(T+1)/2 entries
};

template <typename S>
struct Grads {
  std::vector<LayerGrads<S>> layers;
  TimeTensor<S> input;  // gradient w.r.t. the network input activations
};

// Reverse pass of forward_parallel. The Heaviside is replaced by the
// surrogate window, the binarizer by the clipped straight-through estimator.
// `upstream_logits` is dL/dlogits, (B, C).
template <typename S>
Grads<S> backward_parallel(const Network<S>& net, const ParallelCache<S>& cache,
                           const MatrixR<S>& upstream_logits,
                           const SurrogateSpec<S>& spec = {}) {
  if (cache.layers.size() != net.layers.size())
    throw ConfigError("backward_parallel: cache does not match network");
  const Index t_steps = net.t_steps;
  const Index batch = cache.input.batch();

  // dL/dH of the readout layer: logits are the time average of H.
  auto& last = cache.layers.back();
  TimeTensor<S> g_h(t_steps, batch, last.pre_activation.features());
  {
    ConstMapMatrixR<S> up_flat(upstream_logits.data(), 1,
                               batch * last.pre_activation.features());
    auto tm = g_h.time_major();
    for (Index t = 0; t < t_steps; ++t)
      tm.row(t) = up_flat.row(0) / static_cast<S>(t_steps);
  }

  Grads<S> grads;
  grads.layers.resize(net.layers.size());
  TimeTensor<S> g_act;  // dL/d(layer output activations), set below the top
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer<S>& layer = net.layers[li];
    const LayerForward<S>& fwd = cache.layers[li];
    const Index n_out = layer.fan_out();

    if (li + 1 != net.layers.size()) {
      // Hidden layer: upstream arrives through its activations.
      g_h = TimeTensor<S>(t_steps, batch, n_out);
      g_h.rows() = g_act.rows().cwiseProduct(
          surrogate_grad_mat<S>(fwd.pre_activation.rows(), layer.cfg.v_th,
                                cache.smoothed ? cache.smooth_width : spec.width));
    }

    const EffectiveWeights<S> w = effective_weights(layer);
    // H = alpha * (M Y)  =>  dP = alpha * dH, dY = M^T dP.
    TimeTensor<S> g_p(t_steps, batch, n_out);
    g_p.rows() = w.alpha * g_h.rows();

    LayerGrads<S>& lg = grads.layers[li];
    lg.mix.assign(static_cast<std::size_t>(t_steps * (t_steps + 1) / 2), S(0));
    auto gp_tm = g_p.time_major();
    auto y_tm = fwd.current.time_major();
    std::size_t idx = 0;
    for (Index j = 0; j < t_steps; ++j)
      for (Index i = 0; i <= j; ++i)
        lg.mix[idx++] = gp_tm.row(j).dot(y_tm.row(i));

    TimeTensor<S> g_y(t_steps, batch, n_out);
    {
      const MatrixR<S> m_t = layer.mix.tri.dense().transpose();
      g_y.time_major() = m_t * g_p.time_major();
    }

    const MatrixR<S>& x_rows = cache.activations_in(li).rows();
    if (layer.weight_bits == 1) {
      // Gradient w.r.t. the effective weight alpha*sign(latent); the scale is
      // treated as a constant of the step and folded out before the STE.
      MatrixR<S> g_weff_t = x_rows.transpose() * g_y.rows();  // (in, out)
      if (w.alpha != S(0)) g_weff_t /= w.alpha;
      const MatrixR<S> g_weff = g_weff_t.transpose();
      lg.latent = ste_grad<S>(g_weff, layer.latent, S(1));
    } else {
      lg.latent = (x_rows.transpose() * g_y.rows()).transpose();
    }

    // dL/d(input activations) via the true effective weights.
    TimeTensor<S> g_x(t_steps, batch, layer.fan_in());
    g_x.rows() = g_y.rows() * w.wt.transpose();
    if (li == 0)
      grads.input = std::move(g_x);
    else
      g_act = std::move(g_x);
  }
  return grads;
}

// Softmax cross-entropy on the rate readout; returns mean loss and fills
// dL/dlogits.
template <typename S>
S rate_cross_entropy(const MatrixR<S>& logits, const std::vector<int>& labels,
                     MatrixR<S>* dlogits) {
  const Index b = logits.rows(), c = logits.cols();
  if (static_cast<Index>(labels.size()) != b)
    throw ShapeError("rate_cross_entropy: batch/label count mismatch");
  if (dlogits) dlogits->setZero(b, c);
  S loss(0);
  for (Index i = 0; i < b; ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= c)
      throw ConfigError("rate_cross_entropy: label " +
                        std::to_string(labels[static_cast<std::size_t>(i)]) +
                        " out of range [0, " + std::to_string(c) + ")");
    const S mx = logits.row(i).maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> ex = (logits.row(i).array() - mx).exp();
    const S z = ex.sum();
    const int y = labels[static_cast<std::size_t>(i)];
    loss += -(logits(i, y) - mx - std::log(z));
    if (dlogits) {
      for (Index j = 0; j < c; ++j)
        (*dlogits)(i, j) = (ex(j) / z - (j == y ? S(1) : S(0))) / static_cast<S>(b);
    }
  }
  return loss / static_cast<S>(b);
}

template <typename S>
struct TrainConfig {
  S lr = S(0.05);
  S momentum = S(0.9);
  int epochs = 30;
  Index batch = 32;
  std::uint64_t seed = 1;

  void validate() const {
    if (lr < S(0)) throw ConfigError("train.lr must be >= 0");
    if (momentum < S(0) || momentum >= S(1))
      throw ConfigError("train.momentum must lie in [0, 1)");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch < 1) throw ConfigError("train.batch must be >= 1");
  }
};

template <typename S>
struct Velocity {
  std::vector<LayerGrads<S>> layers;  // same shapes as Grads
};

template <typename S>
Velocity<S> zero_velocity(const Network<S>& net) {
  Velocity<S> v;
  for (const Layer<S>& layer : net.layers) {
    LayerGrads<S> lg;
    lg.latent = MatrixR<S>::Zero(layer.fan_out(), layer.fan_in());
    lg.mix.assign(layer.mix.tri.packed().size(), S(0));
    v.layers.push_back(std::move(lg));
  }
  return v;
}

// velocity = momentum*velocity + grad; param -= lr*velocity. Mix diagonals
// are clamped to |entry| >= 1e-3 afterwards so folding stays invertible.
template <typename S>
void sgd_step(Network<S>& net, const Grads<S>& grads, Velocity<S>& vel, S lr, S momentum) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Layer<S>& layer = net.layers[l];
    LayerGrads<S>& v = vel.layers[l];
    const LayerGrads<S>& g = grads.layers[l];
    v.latent = momentum * v.latent + g.latent;
    layer.latent -= lr * v.latent;
    auto& packed = layer.mix.tri.packed();
    for (std::size_t i = 0; i < packed.size(); ++i) {
      v.mix[i] = momentum * v.mix[i] + g.mix[i];
      packed[i] -= lr * v.mix[i];
    }
    const S floor = S(1e-3);
    for (Index d = 0; d < net.t_steps; ++d) {
      S& entry = layer.mix.tri(d, d);
      if (std::abs(entry) < floor) entry = entry < S(0) ? -floor : floor;
    }
  }
}

struct EpochMetrics {
  int epoch;
  std::string split;
  double loss;
  double accuracy;
  double wall_ms;
};

// Rate-encoded classification samples: each sample is a (T, 1, N) train.
struct Dataset {
  std::vector<SpikeTrain> samples;
  std::vector<int> labels;
  Index classes = 0;

  Index size() const { return static_cast<Index>(samples.size()); }
};

template <typename S>
TimeTensor<S> assemble_batch(const Dataset& data, const std::vector<Index>& idx) {
  const Index t = data.samples.front().t_steps();
  const Index n = data.samples.front().features();
  TimeTensor<S> out(t, static_cast<Index>(idx.size()), n);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const SpikeTrain& s = data.samples[static_cast<std::size_t>(idx[b])];
    for (Index tt = 0; tt < t; ++tt)
      for (Index f = 0; f < n; ++f)
        out.step(tt)(static_cast<Index>(b), f) = s.get(tt, 0, f) ? S(1) : S(0);
  }
  return out;
}

// Plain SGD loop over shuffled minibatches; spiking forward, surrogate
// backward. Deterministic given the seed (wall_ms excepted).
template <typename S>
std::vector<EpochMetrics> train(Network<S>& net, const Dataset& data,
                                const TrainConfig<S>& cfg) {
  cfg.validate();
  net.validate();
  if (data.samples.empty()) throw ConfigError("train: empty dataset");
  for (int label : data.labels)
    if (label < 0 || label >= net.output_dim())
      throw ConfigError("train: label " + std::to_string(label) + " out of range [0, " +
                        std::to_string(net.output_dim()) + ")");
  Velocity<S> vel = zero_velocity(net);
  SurrogateSpec<S> surrogate;
  Rng rng(mix_seed(cfg.seed, 0x7a));
  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::vector<EpochMetrics> metrics;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double loss_sum = 0.0;
    Index correct = 0, seen = 0;
    for (Index start = 0; start < data.size(); start += cfg.batch) {
      const Index stop = std::min<Index>(start + cfg.batch, data.size());
      std::vector<Index> idx(order.begin() + start, order.begin() + stop);
      std::vector<int> labels;
      for (Index i : idx) labels.push_back(data.labels[static_cast<std::size_t>(i)]);
      const TimeTensor<S> x = assemble_batch<S>(data, idx);
      ParallelCache<S> cache = forward_parallel(net, x);
      MatrixR<S> dlogits;
      const S loss = rate_cross_entropy<S>(cache.logits, labels, &dlogits);
      loss_sum += static_cast<double>(loss) * static_cast<double>(idx.size());
      for (Index i = 0; i < cache.logits.rows(); ++i) {
        Index best = 0;
        cache.logits.row(i).maxCoeff(&best);
        if (static_cast<int>(best) == labels[static_cast<std::size_t>(i)]) ++correct;
        ++seen;
      }
      Grads<S> grads = backward_parallel(net, cache, dlogits, surrogate);
      sgd_step(net, grads, vel, cfg.lr, cfg.momentum);
    }
    const auto t1 = std::chrono::steady_clock::now();
    metrics.push_back(EpochMetrics{
        epoch, "train", loss_sum / static_cast<double>(seen),
        static_cast<double>(correct) / static_cast<double>(seen),
        std::chrono::duration<double, std::milli>(t1 - t0).count()});
  }
  return metrics;
}

}  // namespace mfpq
