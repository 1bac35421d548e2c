#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "mfpq/lif.hpp"
#include "mfpq/network.hpp"
#include "mfpq/rng.hpp"

namespace mfpq {

// ---------------------------------------------------------------------------
// Memory accounting
// ---------------------------------------------------------------------------

struct ArchLayer {
  Index fan_in = 0;
  Index fan_out = 0;
};

struct ArchDescription {
  Index input_dim = 0;
  std::vector<ArchLayer> layers;

  std::uint64_t weight_count() const {
    std::uint64_t w = 0;
    for (const auto& l : layers)
      w += static_cast<std::uint64_t>(l.fan_in) * static_cast<std::uint64_t>(l.fan_out);
    return w;
  }
  std::uint64_t neuron_count() const {
    std::uint64_t n = 0;
    for (const auto& l : layers) n += static_cast<std::uint64_t>(l.fan_out);
    return n;
  }
};

enum class MemoryScheme { kFp32Lif, kMfpBinary };

inline const char* memory_scheme_name(MemoryScheme s) {
  return s == MemoryScheme::kFp32Lif ? "fp32-lif" : "mfp-binary";
}

struct LayerMemory {
  std::uint64_t weight_bits = 0;
  std::uint64_t membrane_bits = 0;
  std::uint64_t aux_bits = 0;  // alpha, mix entries, folded thresholds

  std::uint64_t total_bits() const { return weight_bits + membrane_bits + aux_bits; }
};

// Closed-form bit accounting. MB means 2^20 bytes throughout.
struct MemoryReport {
  MemoryScheme scheme = MemoryScheme::kFp32Lif;
  Index t_steps = 0;
  std::vector<LayerMemory> layers;
  std::uint64_t total_bits = 0;
  double baseline_ratio = 1.0;  // 32/32 baseline of the same architecture / this

  double total_bytes() const { return static_cast<double>(total_bits) / 8.0; }
  double total_mb() const { return total_bytes() / (1024.0 * 1024.0); }
};

// Baseline stores 32-bit weights plus one 32-bit membrane per neuron. The
// memory-free scheme stores 1-bit weights and no membrane; its auxiliary
// cost is one scale, the packed mix matrix, and T folded thresholds per
// layer, all 32-bit.
inline MemoryReport account_memory(const ArchDescription& arch, MemoryScheme scheme,
                                   Index t_steps) {
  if (arch.layers.empty()) throw ConfigError("account_memory: empty architecture");
  if (t_steps < 1) throw ConfigError("account_memory: t_steps must be >= 1");
  MemoryReport report;
  report.scheme = scheme;
  report.t_steps = t_steps;
  std::uint64_t baseline_total = 0;
  const std::uint64_t tt = static_cast<std::uint64_t>(t_steps);
  for (const auto& l : arch.layers) {
    const std::uint64_t weights =
        static_cast<std::uint64_t>(l.fan_in) * static_cast<std::uint64_t>(l.fan_out);
    const std::uint64_t neurons = static_cast<std::uint64_t>(l.fan_out);
    LayerMemory m;
    if (scheme == MemoryScheme::kFp32Lif) {
      m.weight_bits = 32 * weights;
      m.membrane_bits = 32 * neurons;
      m.aux_bits = 0;
    } else {
      m.weight_bits = weights;
      m.membrane_bits = 0;
      m.aux_bits = 32 + 32 * (tt * (tt + 1) / 2) + 32 * tt;
    }
    baseline_total += 32 * weights + 32 * neurons;
    report.total_bits += m.total_bits();
    report.layers.push_back(m);
  }
  report.baseline_ratio =
      static_cast<double>(baseline_total) / static_cast<double>(report.total_bits);
  return report;
}

// ---------------------------------------------------------------------------
// Historical-vs-current contribution statistics
// ---------------------------------------------------------------------------

struct ContributionStats {
  std::vector<double> hist_per_step;  // mean |tau * U[t-1]| at each step
  std::vector<double> curr_per_step;  // mean |W S[t]| at each step
  double mean_hist = 0.0;
  double mean_curr = 0.0;
  double history_fraction = 0.0;  // mean_hist / (mean_hist + mean_curr), 0/0 -> 0
};

// Recurrent LIF stack with real-valued weights and an optionally quantized
// membrane; the instrument for measuring how much of H is history. Bypasses
// the tau > 0 network validation on purpose: tau = 0 is a meaningful probe.
template <typename S>
struct QlifNetwork {
  std::vector<MatrixR<S>> weights;  // (out, in) per layer
  NeuronConfig<S> cfg;
  std::vector<S> membrane_alpha;  // per layer; used when membrane_bits >= 2
};

// Dequantized weights of a trained network, one real matrix per layer.
template <typename S>
QlifNetwork<S> qlif_from_network(const Network<S>& net) {
  QlifNetwork<S> q;
  q.cfg = net.layers.front().cfg;
  for (const Layer<S>& layer : net.layers) {
    const EffectiveWeights<S> w = effective_weights(layer);
    q.weights.push_back((w.alpha == S(0) ? S(1) : w.alpha) * w.wt.transpose());
    q.membrane_alpha.push_back(S(1));
  }
  return q;
}

// Max-abs membrane over a full-precision run; the shared quantization scale
// for every bit-width so runs stay comparable.
template <typename S>
void calibrate_membrane(QlifNetwork<S>& q, const TimeTensor<S>& input) {
  const Index b = input.batch();
  std::vector<LIFState<S>> states;
  for (const auto& w : q.weights) states.emplace_back(b, w.rows());
  std::vector<S> max_abs(q.weights.size(), S(0));
  NeuronConfig<S> fp_cfg = q.cfg;
  fp_cfg.membrane_bits = 0;
  for (Index t = 0; t < input.t_steps(); ++t) {
    MatrixR<S> act = input.step(t);
    for (std::size_t l = 0; l < q.weights.size(); ++l) {
      const MatrixR<S> current = act * q.weights[l].transpose();
      const auto r = lif_step(states[l], current, fp_cfg);
      max_abs[l] = std::max(max_abs[l], states[l].u.array().abs().maxCoeff());
      act = r.spikes;
    }
  }
  for (std::size_t l = 0; l < q.weights.size(); ++l)
    q.membrane_alpha[l] = max_abs[l] > S(0) ? max_abs[l] : S(1);
}

// Runs the QLIF engine over a batch, accumulating |tau U| and |W S| means.
// membrane_bits = 0 runs the full-precision membrane.
template <typename S>
ContributionStats contribution_stats(QlifNetwork<S>& q, const TimeTensor<S>& input,
                                     int membrane_bits,
                                     const MatrixR<S>* initial_u = nullptr) {
  const Index b = input.batch();
  std::vector<LIFState<S>> states;
  for (const auto& w : q.weights) states.emplace_back(b, w.rows());
  if (initial_u) {
    if (states.size() != 1)
      throw ConfigError("contribution_stats: initial_u needs a single-layer model");
    states[0].u = *initial_u;
  }
  NeuronConfig<S> cfg = q.cfg;
  cfg.membrane_bits = membrane_bits;
  ContributionStats stats;
  stats.hist_per_step.assign(static_cast<std::size_t>(input.t_steps()), 0.0);
  stats.curr_per_step.assign(static_cast<std::size_t>(input.t_steps()), 0.0);
  double hist_sum = 0.0, curr_sum = 0.0;
  std::uint64_t count = 0;
  for (Index t = 0; t < input.t_steps(); ++t) {
    MatrixR<S> act = input.step(t);
    double hist_t = 0.0, curr_t = 0.0;
    std::uint64_t count_t = 0;
    for (std::size_t l = 0; l < q.weights.size(); ++l) {
      const MatrixR<S> current = act * q.weights[l].transpose();
      hist_t += static_cast<double>((cfg.tau * states[l].u).array().abs().sum());
      curr_t += static_cast<double>(current.array().abs().sum());
      count_t += static_cast<std::uint64_t>(current.size());
      if (membrane_bits >= 2) {
        const QuantSpec<S> spec(membrane_bits, q.membrane_alpha[l]);
        act = qlif_step(states[l], current, cfg, spec).spikes;
      } else {
        NeuronConfig<S> fp = cfg;
        fp.membrane_bits = 0;
        act = lif_step(states[l], current, fp).spikes;
      }
    }
    stats.hist_per_step[static_cast<std::size_t>(t)] =
        hist_t / static_cast<double>(count_t);
    stats.curr_per_step[static_cast<std::size_t>(t)] =
        curr_t / static_cast<double>(count_t);
    hist_sum += hist_t;
    curr_sum += curr_t;
    count += count_t;
  }
  stats.mean_hist = hist_sum / static_cast<double>(count);
  stats.mean_curr = curr_sum / static_cast<double>(count);
  const double denom = stats.mean_hist + stats.mean_curr;
  stats.history_fraction = denom == 0.0 ? 0.0 : stats.mean_hist / denom;
  return stats;
}

// ---------------------------------------------------------------------------
// Operation counting
// ---------------------------------------------------------------------------

struct OpCount {
  std::uint64_t ac_ops = 0;
  std::uint64_t mac_ops = 0;
};

// Recomputed from recorded spike trains alone: every input spike triggers
// fan-out accumulations (AC); every real*real product in the temporal mixing
// and the alpha scaling counts as a MAC. Folded mode needs neither.
template <typename S>
OpCount count_ops(const Network<S>& net, const SpikeTrain& input,
                  const std::vector<SpikeTrain>& layer_spikes, ForwardMode mode) {
  OpCount ops;
  const std::uint64_t t = static_cast<std::uint64_t>(net.t_steps);
  const std::uint64_t b = static_cast<std::uint64_t>(input.batch());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const SpikeTrain& in = l == 0 ? input : layer_spikes[l - 1];
    const std::uint64_t fan_out = static_cast<std::uint64_t>(net.layers[l].fan_out());
    ops.ac_ops += static_cast<std::uint64_t>(in.count()) * fan_out;
    if (mode == ForwardMode::kParallel || mode == ForwardMode::kStreaming) {
      const std::uint64_t mix_macs = t * (t + 1) / 2 * b * fan_out;
      const std::uint64_t alpha_macs = t * b * fan_out;
      ops.mac_ops += mix_macs + alpha_macs;
    }
  }
  return ops;
}

// ---------------------------------------------------------------------------
// Parallel vs serial wall-clock
// ---------------------------------------------------------------------------

struct BenchResult {
  double parallel_ms = 0.0;
  double serial_ms = 0.0;
  double speedup = 0.0;  // serial / parallel
  bool outputs_match = false;
  Index t_steps = 0;
  Index batch = 0;
  int repeats = 0;
};

namespace detail {
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}
}  // namespace detail

// Median per-forward wall clock on identical random inputs, warm-up runs
// excluded, measurements interleaved so drift hits both modes alike. The
// first repeat doubles as a cross-mode equality check.
template <typename S>
BenchResult bench_parallel_vs_serial(const Network<S>& net, Index batch, int repeats,
                                     std::uint64_t seed = 9) {
  if (repeats < 5) throw ConfigError("bench: repeats must be >= 5");
  net.validate();
  Rng rng(mix_seed(seed, 0xbe));
  TimeTensor<S> x(net.t_steps, batch, net.input_dim);
  for (Index i = 0; i < x.rows().size(); ++i)
    x.rows().data()[i] = rng.bernoulli(0.5) ? S(1) : S(0);

  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  auto run_parallel = [&]() {
    const auto t0 = clock::now();
    ParallelCache<S> cache = forward_parallel(net, x);
    const auto t1 = clock::now();
    sink = sink + static_cast<double>(cache.logits(0, 0));
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  };
  auto run_serial = [&](std::vector<MatrixR<S>>* final_spikes) {
    const auto t0 = clock::now();
    StreamingRunner<S> runner(net, batch);
    for (Index t = 0; t < net.t_steps; ++t) {
      auto spikes = runner.step(x.step(t), t);
      if (final_spikes) (*final_spikes)[static_cast<std::size_t>(t)] = spikes.back();
    }
    const MatrixR<S> logits = runner.logits();
    const auto t1 = clock::now();
    sink = sink + static_cast<double>(logits(0, 0));
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  // Correctness piggyback on untimed runs.
  ParallelCache<S> cache = forward_parallel(net, x);
  std::vector<MatrixR<S>> serial_final(static_cast<std::size_t>(net.t_steps));
  run_serial(&serial_final);
  bool match = true;
  for (Index t = 0; t < net.t_steps; ++t) {
    const MatrixR<S> expected = cache.layers.back().spikes.step(t);
    if (!(expected.array() == serial_final[static_cast<std::size_t>(t)].array()).all())
      match = false;
  }

  run_parallel();  // warm-up
  std::vector<double> par_ms, ser_ms;
  for (int r = 0; r < repeats; ++r) {
    par_ms.push_back(run_parallel());
    ser_ms.push_back(run_serial(nullptr));
  }
  BenchResult res;
  res.parallel_ms = detail::median(par_ms);
  res.serial_ms = detail::median(ser_ms);
  res.speedup = res.serial_ms / res.parallel_ms;
  res.outputs_match = match;
  res.t_steps = net.t_steps;
  res.batch = batch;
  res.repeats = repeats;
  return res;
}

}  // namespace mfpq
