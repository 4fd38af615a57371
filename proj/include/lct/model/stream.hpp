// SPDX-License-Identifier: Apache-2.0
//
// Frame-in/frame-out inference. Each push takes one hop of input samples and
// returns one hop of output delayed by stream_delay_samples(): the analysis
// frame completes at the end of the hop, and with lookahead the first time
// transformer waits for one more frame before it can attend.
//
// All buffers are allocated once in the constructor; the state size does not
// depend on how long the stream runs.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lct/dsp/fft.hpp"
#include "lct/model/generator.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

/// Time-transformer carry: GRU hidden state per frequency position, key/value
/// history stored twice back to back so any window is contiguous, and the
/// normalised inputs still waiting for their lookahead frame.
struct TimeBlockState {
  Tensor hidden;   // (P, C)
  Tensor keys;     // (2 * capacity, P, C)
  Tensor values;   // (2 * capacity, P, C)
  Tensor pending;  // (lookahead + 1, P, C)
  Index capacity = 0;
  Index frames = 0;
};

struct StreamState {
  std::vector<Real> input_tail;        // last hop of input samples
  std::vector<Real> output_tail;       // overlap-add carry
  std::vector<Tensor> encoder_history;  // (1, Cin, kernel_time - 1, W) per layer
  std::vector<Tensor> decoder_history;
  std::vector<Tensor> skip_delay;       // (lookahead + 1, C, W) per encoder layer
  Tensor spectrum_delay;                // (lookahead + 1, bins, 2)
  std::vector<TimeBlockState> time_blocks;  // one per bottleneck block, empty for 'F'
  Index frames = 0;

  std::size_t memory_bytes() const;
};

class StreamEnhancer {
 public:
  explicit StreamEnhancer(const Generator& gen);

  /// Consumes exactly hop samples and returns hop output samples.
  std::vector<Real> push(std::span<const Real> chunk);
  /// Pushes the silent chunks that drain the pipeline delay.
  std::vector<Real> flush();
  void reset();

  Index hop() const { return gen_->config().hop; }
  Index delay_samples() const { return gen_->config().stream_delay_samples(); }
  const StreamState& state() const { return state_; }
  std::size_t memory_bytes() const { return state_.memory_bytes(); }

 private:
  Tensor analyse(std::span<const Real> chunk);
  std::vector<Real> synthesise(const Tensor* mask_frame, Index out_frame);
  Tensor encoder_step(std::size_t layer, const Tensor& frame);
  Tensor decoder_step(std::size_t layer, const Tensor& frame);
  /// Returns false while the block still waits for lookahead frames.
  bool time_block_step(std::size_t block, Tensor& frame);

  const Generator* gen_;
  std::vector<Real> window_;
  std::vector<double> envelope_;
  std::unique_ptr<dsp::RealFft> fft_;
  StreamState state_;
};

/// Offline-shaped helper: streams a whole signal (zero-padded to a hop
/// multiple), drains the delay and returns output aligned with the input.
std::vector<Real> enhance_streaming(const Generator& gen, std::span<const Real> noisy);

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
