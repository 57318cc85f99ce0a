#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chunkwise/decode.hpp"
#include "chunkwise/finetune.hpp"
#include "chunkwise/metrics.hpp"
#include "chunkwise/model.hpp"

namespace chunkwise {

// Binary tensor: "CWTF", u32 version (1), u32 rows, u32 cols, rows*cols float32, all
// little-endian, row-major. Malformed input raises FormatError with the byte offset.
std::string encode_tensor(const Matrix& m);
Matrix decode_tensor(std::string_view bytes);
void write_tensor(const std::filesystem::path& path, const Matrix& m);
Matrix read_tensor(const std::filesystem::path& path);

// Token id -> display word. Ids 0 and 1 are the reserved markers.
using Vocabulary = std::vector<std::string>;

Vocabulary default_vocabulary(std::size_t size);
std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> tokens);
std::vector<TokenId> tokenize(const Vocabulary& vocab, std::string_view text);

struct ModelBundle {
  ModelWeights weights;
  Vocabulary vocab;
};

// Writes <dir>/model.json plus one tensor file per named tensor.
void save_model(const std::filesystem::path& dir, const ModelWeights& weights, const Vocabulary& vocab);
// Accepts the manifest path or its directory.
ModelBundle load_model(const std::filesystem::path& manifest_or_dir);

// Writes <dir>/adapters.json plus the A/B tensor files.
void save_adapters(const std::filesystem::path& dir, const LoraSet& adapters);
LoraSet load_adapters(const std::filesystem::path& manifest_or_dir);

// Timeline as JSON Lines: {"k","time_ms","tokens","text","latency_ms"} per chunk.
void write_timeline(std::ostream& out, const Timeline& timeline, const Vocabulary& vocab);
void write_timeline(const std::filesystem::path& path, const Timeline& timeline, const Vocabulary& vocab);

struct TimelineLine {
  TimelineEvent event;
  std::string text;
};
std::vector<TimelineLine> read_timeline(const std::filesystem::path& path);
std::vector<TimelineLine> parse_timeline(std::string_view jsonl);

// {"words": [{"w", "end_ms"}], "tokens": [{"id", "end_ms"}], "duration_ms"?}
struct AlignmentFile {
  ReferenceAlignment reference;
  std::vector<AlignedToken> tokens;
};
void write_alignment(const std::filesystem::path& path, const AlignmentFile& alignment);
AlignmentFile read_alignment(const std::filesystem::path& path);

// <dir>/dataset.json: {"utterances": [{"id", "features", "alignment"}]} with paths
// relative to the directory.
struct DatasetEntry {
  std::string id;
  std::filesystem::path features;
  std::filesystem::path alignment;
};
void write_dataset_manifest(const std::filesystem::path& dir, const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& dir);
std::vector<AlignedUtterance> load_dataset(const std::filesystem::path& dir);

// step,utterance,point_frame,loss
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& trace);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace chunkwise
