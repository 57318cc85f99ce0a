#include "chunkwise/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "chunkwise/errors.hpp"

namespace chunkwise {

void ModelConfig::validate() const {
  if (d < 2) throw DomainError("model config: d must be >= 2");
  if (vocab < 3) throw DomainError("model config: vocab must be >= 3");
  if (layers_enc == 0 || layers_dec == 0) throw DomainError("model config: need at least one layer each");
  if (t_max == 0) throw DomainError("model config: t_max must be positive");
}

namespace {

template <class Weights, class Out>
void collect_tensors(Weights& w, Out& out) {
  auto attn = [&](const std::string& prefix, auto& a) {
    out.emplace_back(prefix + ".q", &a.wq);
    out.emplace_back(prefix + ".k", &a.wk);
    out.emplace_back(prefix + ".v", &a.wv);
  };
  for (std::size_t l = 0; l < w.encoder.size(); ++l) {
    const std::string p = "enc." + std::to_string(l);
    attn(p + ".self", w.encoder[l].self);
    out.emplace_back(p + ".ff.w", &w.encoder[l].ff.w);
    out.emplace_back(p + ".ff.b", &w.encoder[l].ff.b);
  }
  for (std::size_t l = 0; l < w.decoder.size(); ++l) {
    const std::string p = "dec." + std::to_string(l);
    attn(p + ".self", w.decoder[l].self);
    attn(p + ".cross", w.decoder[l].cross);
    out.emplace_back(p + ".ff.w", &w.decoder[l].ff.w);
    out.emplace_back(p + ".ff.b", &w.decoder[l].ff.b);
  }
  out.emplace_back("embedding", &w.embedding);
  out.emplace_back("output", &w.output);
}

AttentionWeights make_attention(std::size_t d) { return {Matrix(d, d), Matrix(d, d), Matrix(d, d)}; }

}  // namespace

std::vector<std::pair<std::string, const Matrix*>> ModelWeights::named_tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  collect_tensors(*this, out);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> ModelWeights::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  collect_tensors(*this, out);
  return out;
}

ModelWeights init_weights(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.d;
  ModelWeights w;
  w.config = config;
  for (std::size_t l = 0; l < config.layers_enc; ++l)
    w.encoder.push_back({make_attention(d), {Matrix(d, d), Matrix(1, d)}});
  for (std::size_t l = 0; l < config.layers_dec; ++l)
    w.decoder.push_back({make_attention(d), make_attention(d), {Matrix(d, d), Matrix(1, d)}});
  w.embedding = Matrix(config.vocab, d);
  w.output = Matrix(d, config.vocab);

  std::mt19937 rng(static_cast<std::mt19937::result_type>(config.seed ^ (config.seed >> 32)));
  const float amplitude = std::sqrt(3.0f) / std::sqrt(static_cast<float>(d));
  for (auto& [name, m] : w.named_tensors()) {
    for (float& x : m->data()) {
      const float u = static_cast<float>(rng() >> 8) * 0x1p-24f;
      x = (2.0f * u - 1.0f) * amplitude;
    }
  }
  return w;
}

void add_position_code(std::span<float> row, std::size_t pos) {
  const std::size_t d = row.size();
  for (std::size_t c = 0; c < d; ++c) {
    const double exponent = static_cast<double>(2 * (c / 2)) / static_cast<double>(d);
    const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
    row[c] += static_cast<float>(c % 2 == 0 ? std::sin(angle) : std::cos(angle));
  }
}

// ---- adapters ----------------------------------------------------------------------

std::string AdapterTarget::name() const {
  std::ostringstream os;
  switch (site) {
    case AdapterSite::kEncoderSelf: os << "enc." << layer << ".self"; break;
    case AdapterSite::kDecoderSelf: os << "dec." << layer << ".self"; break;
    case AdapterSite::kDecoderCross: os << "dec." << layer << ".cross"; break;
  }
  switch (projection) {
    case Projection::kQuery: os << ".q"; break;
    case Projection::kKey: os << ".k"; break;
    case Projection::kValue: os << ".v"; break;
  }
  return os.str();
}

AdapterTarget AdapterTarget::parse(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  if (parts.size() != 4) throw FormatError("bad adapter target '" + name + "'");
  AdapterTarget t;
  try {
    t.layer = std::stoul(parts[1]);
  } catch (const std::exception&) {
    throw FormatError("bad adapter layer in '" + name + "'");
  }
  if (parts[0] == "enc" && parts[2] == "self") t.site = AdapterSite::kEncoderSelf;
  else if (parts[0] == "dec" && parts[2] == "self") t.site = AdapterSite::kDecoderSelf;
  else if (parts[0] == "dec" && parts[2] == "cross") t.site = AdapterSite::kDecoderCross;
  else throw FormatError("bad adapter site in '" + name + "'");
  if (parts[3] == "q") t.projection = Projection::kQuery;
  else if (parts[3] == "k") t.projection = Projection::kKey;
  else if (parts[3] == "v") t.projection = Projection::kValue;
  else throw FormatError("bad adapter projection in '" + name + "'");
  return t;
}

std::size_t LoraSet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& a : adapters) n += a.a.size() + a.b.size();
  return n;
}

std::vector<float> LoraSet::flatten() const {
  std::vector<float> flat;
  flat.reserve(parameter_count());
  for (const auto& a : adapters) {
    flat.insert(flat.end(), a.a.data().begin(), a.a.data().end());
    flat.insert(flat.end(), a.b.data().begin(), a.b.data().end());
  }
  return flat;
}

void LoraSet::assign(std::span<const float> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("LoraSet::assign: wrong parameter count");
  std::size_t at = 0;
  for (auto& a : adapters) {
    for (float& x : a.a.data()) x = flat[at++];
    for (float& x : a.b.data()) x = flat[at++];
  }
}

LoraSet make_lora(const ModelConfig& config, const LoraOptions& options) {
  config.validate();
  if (options.rank == 0 || options.rank > config.d) throw DomainError("make_lora: rank must be in [1, d]");
  std::vector<AdapterTarget> targets;
  const Projection projections[] = {Projection::kQuery, Projection::kKey, Projection::kValue};
  auto add_site = [&](AdapterSite site, std::size_t layers) {
    for (std::size_t l = 0; l < layers; ++l)
      for (Projection p : projections) targets.push_back({site, l, p});
  };
  if (options.encoder_self) add_site(AdapterSite::kEncoderSelf, config.layers_enc);
  if (options.decoder_self) add_site(AdapterSite::kDecoderSelf, config.layers_dec);
  if (options.decoder_cross) add_site(AdapterSite::kDecoderCross, config.layers_dec);

  std::mt19937 rng(static_cast<std::mt19937::result_type>(options.seed ^ (options.seed >> 32)));
  const float amplitude = 1.0f / std::sqrt(static_cast<float>(config.d));
  LoraSet set;
  for (const auto& t : targets) {
    LoraAdapter a{t, Matrix(config.d, options.rank), Matrix(options.rank, config.d),
                  options.alpha / static_cast<float>(options.rank)};
    for (float& x : a.a.data()) {
      const float u = static_cast<float>(rng() >> 8) * 0x1p-24f;
      x = (2.0f * u - 1.0f) * amplitude;
    }
    set.adapters.push_back(std::move(a));
  }
  return set;
}

Matrix& projection_weight(ModelWeights& weights, const AdapterTarget& target) {
  const bool enc = target.site == AdapterSite::kEncoderSelf;
  const std::size_t layers = enc ? weights.encoder.size() : weights.decoder.size();
  if (target.layer >= layers) throw ShapeError("adapter target '" + target.name() + "' has no such layer");
  AttentionWeights& a = enc ? weights.encoder[target.layer].self
                            : (target.site == AdapterSite::kDecoderSelf ? weights.decoder[target.layer].self
                                                                        : weights.decoder[target.layer].cross);
  switch (target.projection) {
    case Projection::kQuery: return a.wq;
    case Projection::kKey: return a.wk;
    case Projection::kValue: return a.wv;
  }
  return a.wq;
}

const Matrix& projection_weight(const ModelWeights& weights, const AdapterTarget& target) {
  return projection_weight(const_cast<ModelWeights&>(weights), target);
}

void add_lora_delta(Matrix& w, const LoraAdapter& a) {
  if (a.a.rows() != w.rows() || a.b.cols() != w.cols() || a.a.cols() != a.b.rows()) {
    throw ShapeError("adapter '" + a.target.name() + "' does not match its projection");
  }
  const std::size_t r = a.rank();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      const float aik = a.scale * a.a(i, k);
      if (aik == 0.0f) continue;
      auto brow = a.b.row(k);
      auto dst = w.row(i);
      for (std::size_t j = 0; j < w.cols(); ++j) dst[j] += aik * brow[j];
    }
  }
}

ModelWeights apply_lora(const ModelWeights& weights, const LoraSet& adapters) {
  ModelWeights out = weights;
  for (const auto& a : adapters.adapters) add_lora_delta(projection_weight(out, a.target), a);
  return out;
}

}  // namespace chunkwise
