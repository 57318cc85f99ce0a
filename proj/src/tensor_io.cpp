#include "chunkwise/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "chunkwise/errors.hpp"

namespace chunkwise {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'W', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + at, 4);
  return v;
}

json parse_json(const std::string& text, const fs::path& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
}

template <class T>
T field(const json& j, const char* key, const fs::path& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": field '" + key + "': " + e.what());
  }
}

fs::path manifest_path(const fs::path& p, const char* name) {
  return fs::is_directory(p) ? p / name : p;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::string encode_tensor(const Matrix& m) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  const auto data = m.data();
  out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
  return out;
}

Matrix decode_tensor(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("tensor: bad magic", 0);
  if (bytes.size() < kHeaderBytes) throw FormatError("tensor: truncated header", bytes.size());
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) throw FormatError("tensor: unsupported version " + std::to_string(version), 4);
  const std::size_t rows = get_u32(bytes, 8);
  const std::size_t cols = get_u32(bytes, 12);
  const std::size_t payload = rows * cols * sizeof(float);
  if (bytes.size() < kHeaderBytes + payload) throw FormatError("tensor: truncated payload", bytes.size());
  if (bytes.size() > kHeaderBytes + payload) throw FormatError("tensor: trailing bytes", kHeaderBytes + payload);
  std::vector<float> data(rows * cols);
  std::memcpy(data.data(), bytes.data() + kHeaderBytes, payload);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i])) throw FormatError("tensor: non-finite value", kHeaderBytes + i * sizeof(float));
  return Matrix(rows, cols, std::move(data));
}

void write_tensor(const fs::path& path, const Matrix& m) { write_file(path, encode_tensor(m)); }

Matrix read_tensor(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte_offset());
  }
}

Vocabulary default_vocabulary(std::size_t size) {
  Vocabulary v{"<eot>", "<sot>"};
  for (std::size_t i = 2; i < size; ++i) v.push_back("w" + std::to_string(i));
  v.resize(size);
  return v;
}

std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    if (t == kEndOfTranscript || t == kBeginOfTranscript) continue;
    if (!out.empty()) out += ' ';
    out += static_cast<std::size_t>(t) < vocab.size() ? vocab[static_cast<std::size_t>(t)] : "<" + std::to_string(t) + ">";
  }
  return out;
}

std::vector<TokenId> tokenize(const Vocabulary& vocab, std::string_view text) {
  std::vector<TokenId> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    auto it = std::find(vocab.begin() + std::min<std::ptrdiff_t>(kFirstWordToken, std::ssize(vocab)), vocab.end(), w);
    if (it == vocab.end()) throw DomainError("tokenize: unknown word '" + w + "'");
    out.push_back(static_cast<TokenId>(it - vocab.begin()));
  }
  return out;
}

// ---- model / adapters --------------------------------------------------------------

void save_model(const fs::path& dir, const ModelWeights& weights, const Vocabulary& vocab) {
  fs::create_directories(dir);
  const ModelConfig& c = weights.config;
  json j;
  j["config"] = {{"d", c.d},       {"layers_enc", c.layers_enc}, {"layers_dec", c.layers_dec},
                 {"vocab", c.vocab}, {"t_max", c.t_max},           {"seed", c.seed},
                 {"positional_encoding", c.positional_encoding}};
  j["vocab"] = vocab;
  j["tensors"] = json::array();
  for (const auto& [name, m] : weights.named_tensors()) {
    const std::string file = "tensors/" + name + ".cwt";
    write_tensor(dir / file, *m);
    j["tensors"].push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}, {"file", file}});
  }
  write_file(dir / "model.json", j.dump(2) + "\n");
}

ModelBundle load_model(const fs::path& manifest_or_dir) {
  const fs::path path = manifest_path(manifest_or_dir, "model.json");
  const json j = parse_json(read_file(path), path);
  const json& jc = j.at("config");
  ModelConfig c;
  c.d = field<std::size_t>(jc, "d", path);
  c.layers_enc = field<std::size_t>(jc, "layers_enc", path);
  c.layers_dec = field<std::size_t>(jc, "layers_dec", path);
  c.vocab = field<std::size_t>(jc, "vocab", path);
  c.t_max = field<std::size_t>(jc, "t_max", path);
  c.seed = field<std::uint64_t>(jc, "seed", path);
  c.positional_encoding = field<bool>(jc, "positional_encoding", path);
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": invalid config: " + e.what());
  }
  ModelBundle b;
  b.weights = init_weights(c);
  b.vocab = j.contains("vocab") ? field<Vocabulary>(j, "vocab", path) : default_vocabulary(c.vocab);
  if (b.vocab.size() != c.vocab) throw FormatError(path.string() + ": vocabulary size differs from config");
  std::map<std::string, json> listed;
  for (const auto& t : j.at("tensors")) listed[field<std::string>(t, "name", path)] = t;
  for (auto& [name, m] : b.weights.named_tensors()) {
    auto it = listed.find(name);
    if (it == listed.end()) throw FormatError(path.string() + ": missing tensor '" + name + "'");
    Matrix loaded = read_tensor(path.parent_path() / field<std::string>(it->second, "file", path));
    if (loaded.rows() != m->rows() || loaded.cols() != m->cols())
      throw FormatError(path.string() + ": tensor '" + name + "' has the wrong shape");
    *m = std::move(loaded);
  }
  return b;
}

void save_adapters(const fs::path& dir, const LoraSet& adapters) {
  fs::create_directories(dir);
  json j;
  j["adapters"] = json::array();
  for (const auto& a : adapters.adapters) {
    const std::string name = a.target.name();
    write_tensor(dir / ("lora/" + name + ".a.cwt"), a.a);
    write_tensor(dir / ("lora/" + name + ".b.cwt"), a.b);
    j["adapters"].push_back({{"target", name},
                             {"scale", a.scale},
                             {"a", "lora/" + name + ".a.cwt"},
                             {"b", "lora/" + name + ".b.cwt"}});
  }
  write_file(dir / "adapters.json", j.dump(2) + "\n");
}

LoraSet load_adapters(const fs::path& manifest_or_dir) {
  const fs::path path = manifest_path(manifest_or_dir, "adapters.json");
  const json j = parse_json(read_file(path), path);
  LoraSet set;
  for (const auto& ja : j.at("adapters")) {
    LoraAdapter a;
    try {
      a.target = AdapterTarget::parse(field<std::string>(ja, "target", path));
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    a.scale = field<float>(ja, "scale", path);
    a.a = read_tensor(path.parent_path() / field<std::string>(ja, "a", path));
    a.b = read_tensor(path.parent_path() / field<std::string>(ja, "b", path));
    if (a.a.cols() != a.b.rows()) throw FormatError(path.string() + ": adapter rank mismatch");
    set.adapters.push_back(std::move(a));
  }
  return set;
}

// ---- timeline ----------------------------------------------------------------------

void write_timeline(std::ostream& out, const Timeline& timeline, const Vocabulary& vocab) {
  for (const auto& e : timeline) {
    json j;
    j["k"] = e.chunk;
    j["time_ms"] = e.time_ms;
    j["tokens"] = e.tokens;
    j["text"] = detokenize(vocab, e.tokens);
    j["latency_ms"] = e.latency_ms;
    out << j.dump() << '\n';
  }
}

void write_timeline(const fs::path& path, const Timeline& timeline, const Vocabulary& vocab) {
  std::ostringstream ss;
  write_timeline(ss, timeline, vocab);
  write_file(path, ss.str());
}

std::vector<TimelineLine> parse_timeline(std::string_view jsonl) {
  std::vector<TimelineLine> out;
  std::size_t offset = 0;
  const fs::path name("timeline");
  while (offset < jsonl.size()) {
    std::size_t end = jsonl.find('\n', offset);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string line(jsonl.substr(offset, end - offset));
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw FormatError(std::string("timeline: ") + e.what(), offset + (e.byte > 0 ? e.byte - 1 : 0));
      }
      TimelineLine t;
      try {
        t.event.chunk = j.at("k").get<std::size_t>();
        t.event.time_ms = j.at("time_ms").get<std::int64_t>();
        t.event.tokens = j.at("tokens").get<std::vector<TokenId>>();
        t.event.latency_ms = j.at("latency_ms").get<double>();
        t.text = j.at("text").get<std::string>();
      } catch (const json::exception& e) {
        throw FormatError(std::string("timeline: ") + e.what(), offset);
      }
      if (!out.empty() && t.event.chunk <= out.back().event.chunk)
        throw FormatError("timeline: chunk indices must strictly increase", offset);
      out.push_back(std::move(t));
    }
    offset = end + 1;
  }
  return out;
}

std::vector<TimelineLine> read_timeline(const fs::path& path) {
  try {
    return parse_timeline(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte_offset());
  }
}

// ---- alignment / dataset -----------------------------------------------------------

void write_alignment(const fs::path& path, const AlignmentFile& a) {
  json j;
  j["words"] = json::array();
  for (const auto& w : a.reference.words) j["words"].push_back({{"w", w.word}, {"end_ms", w.end_ms}});
  j["tokens"] = json::array();
  for (const auto& t : a.tokens) j["tokens"].push_back({{"id", t.id}, {"end_ms", t.end_ms}});
  if (a.reference.duration_ms) j["duration_ms"] = *a.reference.duration_ms;
  write_file(path, j.dump(2) + "\n");
}

AlignmentFile read_alignment(const fs::path& path) {
  const json j = parse_json(read_file(path), path);
  AlignmentFile a;
  std::int64_t prev = 0;
  for (const auto& w : j.at("words")) {
    a.reference.words.push_back({field<std::string>(w, "w", path), field<std::int64_t>(w, "end_ms", path)});
    if (a.reference.words.back().end_ms < prev) throw FormatError(path.string() + ": word end times decrease");
    prev = a.reference.words.back().end_ms;
  }
  if (j.contains("tokens"))
    for (const auto& t : j.at("tokens"))
      a.tokens.push_back({field<TokenId>(t, "id", path), field<std::int64_t>(t, "end_ms", path)});
  if (j.contains("duration_ms")) a.reference.duration_ms = field<std::int64_t>(j, "duration_ms", path);
  return a;
}

void write_dataset_manifest(const fs::path& dir, const std::vector<DatasetEntry>& entries) {
  json j;
  j["utterances"] = json::array();
  for (const auto& e : entries)
    j["utterances"].push_back(
        {{"id", e.id}, {"features", e.features.generic_string()}, {"alignment", e.alignment.generic_string()}});
  write_file(dir / "dataset.json", j.dump(2) + "\n");
}

std::vector<DatasetEntry> read_dataset_manifest(const fs::path& dir) {
  const fs::path path = manifest_path(dir, "dataset.json");
  const json j = parse_json(read_file(path), path);
  std::vector<DatasetEntry> out;
  for (const auto& u : j.at("utterances"))
    out.push_back({field<std::string>(u, "id", path), field<std::string>(u, "features", path),
                   field<std::string>(u, "alignment", path)});
  return out;
}

std::vector<AlignedUtterance> load_dataset(const fs::path& dir) {
  const fs::path base = fs::is_directory(dir) ? dir : dir.parent_path();
  std::vector<AlignedUtterance> out;
  for (const auto& e : read_dataset_manifest(dir)) {
    AlignedUtterance u;
    u.id = e.id;
    u.features = read_tensor(base / e.features);
    u.tokens = read_alignment(base / e.alignment).tokens;
    out.push_back(std::move(u));
  }
  return out;
}

void write_loss_csv(const fs::path& path, const std::vector<LossRecord>& trace) {
  std::ostringstream ss;
  ss << "step,utterance,point_frame,loss\n";
  ss << std::setprecision(9);
  for (const auto& r : trace) ss << r.step << ',' << r.utterance << ',' << r.point_frame << ',' << r.loss << '\n';
  write_file(path, ss.str());
}

}  // namespace chunkwise
