#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chunkwise/mask.hpp"
#include "chunkwise/model.hpp"

namespace chunkwise {

struct AlignedToken {
  TokenId id = kFirstWordToken;
  std::int64_t end_ms = 0;
  friend bool operator==(const AlignedToken&, const AlignedToken&) = default;
};

// Features plus weak alignment. End times are nondecreasing and within the audio.
struct AlignedUtterance {
  std::string id;
  Matrix features;
  std::vector<AlignedToken> tokens;

  std::int64_t duration_ms() const noexcept { return static_cast<std::int64_t>(features.rows()) * kFrameMs; }
  void validate() const;
};

// Tokens that have fully ended by `point_frame` frames, followed by end-of-transcript.
std::vector<TokenId> prefix_targets(const AlignedUtterance& utt, std::size_t point_frame);

// Mean negative log-likelihood of prefix_targets under teacher forcing, with the
// encoder seeing only the first `point_frame` frames through the blocked causal mask.
double ce_loss(const ModelWeights& weights, const AlignedUtterance& utt, std::size_t point_frame,
               const MaskSpec& spec);

// Same loss from a precomputed log-probability matrix (row p scores target p).
double ce_from_log_probs(const Matrix& log_probs, std::span<const TokenId> targets);

// Loss with coordinate `index` temporarily set to `value`, all others at their current value.
using CoordinateLoss = std::function<double(std::size_t index, float value)>;

// Central differences (f(w + eps) - f(w - eps)) / (2 eps) per coordinate. Throws
// NumericError on a non-finite loss.
std::vector<double> fd_gradient(const CoordinateLoss& loss, std::span<const float> params, float epsilon);
std::vector<double> fd_gradient(const std::function<double(std::span<const float>)>& loss,
                                std::span<const float> params, float epsilon);

enum class Optimizer { kGradientDescent, kAdam };

struct TrainConfig {
  MaskSpec spec{5, 30};
  Optimizer optimizer = Optimizer::kGradientDescent;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double f_hat = 1.0;
  double learning_rate = 0.5;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0: no cap
  float fd_epsilon = 1e-3f;
  double max_grad_norm = 0.0;  // 0: no clipping
  std::uint64_t seed = 0;
  LoraOptions lora;

  void validate() const;
};

struct LossRecord {
  std::size_t step = 0;
  std::string utterance;
  std::size_t point_frame = 0;
  double loss = 0.0;  // before the update at this step
};

struct TrainResult {
  LoraSet adapters;
  std::vector<LossRecord> trace;
};

// Sampled-point LoRA fine-tuning: one finite-difference gradient step per sampled
// point, points in ascending order, utterances in dataset order, for cfg.epochs
// epochs (sample points are redrawn per epoch). Base weights are never written.
// `initial` overrides the zero-B starting adapters built from cfg.lora.
TrainResult finetune_run(const ModelWeights& base, std::span<const AlignedUtterance> dataset, const TrainConfig& cfg,
                         const LoraSet* initial = nullptr);

}  // namespace chunkwise
