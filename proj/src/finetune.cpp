#include "chunkwise/finetune.hpp"

#include <cmath>
#include <string>

#include "chunkwise/decoder.hpp"
#include "chunkwise/encoder.hpp"
#include "chunkwise/errors.hpp"

namespace chunkwise {

void AlignedUtterance::validate() const {
  std::int64_t prev = 0;
  for (const auto& t : tokens) {
    if (t.end_ms < prev) throw DomainError("utterance '" + id + "': token end times decrease");
    if (t.end_ms > duration_ms()) throw DomainError("utterance '" + id + "': token ends after the audio");
    prev = t.end_ms;
  }
}

std::vector<TokenId> prefix_targets(const AlignedUtterance& utt, std::size_t point_frame) {
  const std::int64_t point_ms = static_cast<std::int64_t>(point_frame) * kFrameMs;
  std::vector<TokenId> out;
  for (const auto& t : utt.tokens)
    if (t.end_ms <= point_ms) out.push_back(t.id);
  out.push_back(kEndOfTranscript);
  return out;
}

double ce_from_log_probs(const Matrix& log_probs, std::span<const TokenId> targets) {
  if (log_probs.rows() != targets.size()) throw ShapeError("ce: one log-probability row per target expected");
  double nll = 0.0;
  for (std::size_t p = 0; p < targets.size(); ++p) nll -= log_probs(p, static_cast<std::size_t>(targets[p]));
  return nll / static_cast<double>(targets.size());
}

namespace {

void check_point(const AlignedUtterance& utt, std::size_t point_frame, const MaskSpec& spec) {
  if (point_frame > utt.features.rows())
    throw DomainError("ce_loss: point frame " + std::to_string(point_frame) + " beyond the " +
                      std::to_string(utt.features.rows()) + " feature frames");
  if (!spec.is_boundary(point_frame))
    throw DomainError("ce_loss: point frame " + std::to_string(point_frame) + " is not a chunk boundary");
}

std::vector<TokenId> teacher_inputs(std::span<const TokenId> targets) {
  std::vector<TokenId> in{kBeginOfTranscript};
  in.insert(in.end(), targets.begin(), targets.end() - 1);
  return in;
}

}  // namespace

double ce_loss(const ModelWeights& weights, const AlignedUtterance& utt, std::size_t point_frame,
               const MaskSpec& spec) {
  check_point(utt, point_frame, spec);
  const Matrix z = encode_full_masked(weights, utt.features.slice_rows(0, point_frame), spec);
  const DecoderSession session = build_session(weights, z);
  const auto targets = prefix_targets(utt, point_frame);
  return ce_from_log_probs(decoder_forward(weights, session.cross(), teacher_inputs(targets)), targets);
}

std::vector<double> fd_gradient(const CoordinateLoss& loss, std::span<const float> params, float epsilon) {
  if (!(epsilon > 0.0f)) throw DomainError("fd_gradient: epsilon must be positive");
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float hi = params[i] + epsilon;
    const float lo = params[i] - epsilon;
    const double fh = loss(i, hi);
    const double fl = loss(i, lo);
    if (!std::isfinite(fh) || !std::isfinite(fl))
      throw NumericError("fd_gradient: non-finite loss at coordinate " + std::to_string(i));
    grad[i] = (fh - fl) / (static_cast<double>(hi) - static_cast<double>(lo));
  }
  return grad;
}

std::vector<double> fd_gradient(const std::function<double(std::span<const float>)>& loss,
                                std::span<const float> params, float epsilon) {
  std::vector<float> work(params.begin(), params.end());
  return fd_gradient(
      [&](std::size_t i, float value) {
        const float saved = work[i];
        work[i] = value;
        const double f = loss(work);
        work[i] = saved;
        return f;
      },
      params, epsilon);
}

void TrainConfig::validate() const {
  if (!(f_hat > 0.0 && f_hat <= 1.0)) throw DomainError("train config: f_hat must be in (0, 1]");
  if (!(fd_epsilon > 0.0f)) throw DomainError("train config: fd_epsilon must be positive");
  if (!(learning_rate >= 0.0)) throw DomainError("train config: learning rate must be >= 0");
  if (max_grad_norm < 0.0) throw DomainError("train config: max_grad_norm must be >= 0");
}

namespace {

// Loss at one sample point under the current adapters, re-evaluated cheaply when a
// single adapter coordinate moves: the encoder output and decoder cross cache are
// recomputed only when the moved coordinate can reach them.
class PointEvaluator {
 public:
  PointEvaluator(const ModelWeights& base, LoraSet& adapters, const AlignedUtterance& utt, std::size_t point_frame,
                 const MaskSpec& spec)
      : base_(base),
        adapters_(adapters),
        spec_(spec),
        x_(utt.features.slice_rows(0, point_frame)),
        targets_(prefix_targets(utt, point_frame)),
        inputs_(teacher_inputs(targets_)),
        eff_(apply_lora(base, adapters)) {
    z_ = encode_full_masked(eff_, x_, spec_);
    cross_ = build_session(eff_, z_).cross();
    for (std::size_t a = 0; a < adapters_.adapters.size(); ++a) {
      const auto& ad = adapters_.adapters[a];
      for (std::size_t i = 0; i < ad.a.size() + ad.b.size(); ++i) coords_.push_back({a, i});
    }
  }

  double current() const { return loss_with(eff_, cross_); }

  double perturbed(std::size_t index, float value) {
    const Coord c = coords_.at(index);
    LoraAdapter& ad = adapters_.adapters[c.adapter];
    float& slot = c.offset < ad.a.size() ? ad.a.data()[c.offset] : ad.b.data()[c.offset - ad.a.size()];
    const float saved = slot;
    slot = value;
    Matrix& w = projection_weight(eff_, ad.target);
    const Matrix saved_w = w;
    w = projection_weight(base_, ad.target);
    for (const auto& other : adapters_.adapters)
      if (other.target == ad.target) add_lora_delta(w, other);

    double loss = 0.0;
    const AdapterTarget& t = ad.target;
    if (t.site == AdapterSite::kEncoderSelf) {
      const Matrix z = encode_full_masked(eff_, x_, spec_);
      loss = loss_with(eff_, build_session(eff_, z).cross());
    } else if (t.site == AdapterSite::kDecoderCross && t.projection != Projection::kQuery) {
      CrossCache cross = cross_;
      Matrix& dst = t.projection == Projection::kKey ? cross.keys[t.layer] : cross.values[t.layer];
      dst = matmul(z_, w);
      loss = loss_with(eff_, cross);
    } else {
      loss = loss_with(eff_, cross_);
    }
    w = saved_w;
    slot = saved;
    return loss;
  }

 private:
  struct Coord {
    std::size_t adapter;
    std::size_t offset;
  };

  double loss_with(const ModelWeights& w, const CrossCache& cross) const {
    return ce_from_log_probs(decoder_forward(w, cross, inputs_), targets_);
  }

  const ModelWeights& base_;
  LoraSet& adapters_;
  MaskSpec spec_;
  Matrix x_;
  std::vector<TokenId> targets_;
  std::vector<TokenId> inputs_;
  ModelWeights eff_;
  Matrix z_;
  CrossCache cross_;
  std::vector<Coord> coords_;
};

}  // namespace

TrainResult finetune_run(const ModelWeights& base, std::span<const AlignedUtterance> dataset, const TrainConfig& cfg,
                         const LoraSet* initial) {
  cfg.validate();
  TrainResult out;
  out.adapters = initial ? *initial : make_lora(base.config, cfg.lora);
  std::size_t step = 0;
  std::vector<double> m1(out.adapters.parameter_count()), m2(m1.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t u = 0; u < dataset.size(); ++u) {
      const AlignedUtterance& utt = dataset[u];
      utt.validate();
      if (utt.features.rows() > base.config.t_max)
        throw CapacityError("utterance '" + utt.id + "' exceeds t_max");
      const auto points = sample_points(cfg.spec, utt.features.rows(), cfg.f_hat, cfg.seed + epoch * 1000003 + u);
      for (std::size_t point : points.frames) {
        if (cfg.max_steps != 0 && step >= cfg.max_steps) return out;
        PointEvaluator eval(base, out.adapters, utt, point, cfg.spec);
        const double loss = eval.current();
        if (!std::isfinite(loss)) throw TrainingError("training diverged: non-finite loss", step);
        out.trace.push_back({step, utt.id, point, loss});

        std::vector<float> params = out.adapters.flatten();
        std::vector<double> grad;
        try {
          grad = fd_gradient([&](std::size_t i, float v) { return eval.perturbed(i, v); }, params, cfg.fd_epsilon);
        } catch (const NumericError& e) {
          throw TrainingError(std::string("training diverged: ") + e.what(), step);
        }
        double factor = cfg.learning_rate;
        if (cfg.max_grad_norm > 0.0) {
          double norm = 0.0;
          for (double g : grad) norm += g * g;
          norm = std::sqrt(norm);
          if (norm > cfg.max_grad_norm) factor *= cfg.max_grad_norm / norm;
        }
        if (factor != 0.0) {
          if (cfg.optimizer == Optimizer::kAdam) {
            const double t = static_cast<double>(step + 1);
            const double c1 = 1.0 - std::pow(cfg.adam_beta1, t), c2 = 1.0 - std::pow(cfg.adam_beta2, t);
            for (std::size_t i = 0; i < params.size(); ++i) {
              const double g = grad[i] * (factor / cfg.learning_rate);
              m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * g;
              m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * g * g;
              params[i] = static_cast<float>(params[i] - cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + 1e-8));
            }
          } else {
            for (std::size_t i = 0; i < params.size(); ++i)
              params[i] = static_cast<float>(params[i] - factor * grad[i]);
          }
          out.adapters.assign(params);
        }
        ++step;
      }
    }
  }
  return out;
}

}  // namespace chunkwise
