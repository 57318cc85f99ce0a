// chunkwise: stream / score / bench / finetune / gen-toy front end.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chunkwise/bench.hpp"
#include "chunkwise/decode.hpp"
#include "chunkwise/errors.hpp"
#include "chunkwise/finetune.hpp"
#include "chunkwise/metrics.hpp"
#include "chunkwise/recognizer.hpp"
#include "chunkwise/synthetic.hpp"
#include "chunkwise/tensor_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace chunkwise;

namespace {

std::size_t ms_to_frames(std::size_t ms, const char* what) {
  if (ms == 0 || ms % kFrameMs != 0)
    throw UsageError(std::string(what) + "=" + std::to_string(ms) + " ms is not a positive multiple of 20 ms");
  return ms / kFrameMs;
}

MaskSpec spec_from_ms(std::size_t tau_ms, std::size_t tau0_ms) {
  const std::size_t tau = ms_to_frames(tau_ms, "--tau-ms"), tau0 = ms_to_frames(tau0_ms, "--tau0-ms");
  if (tau0 % tau != 0) throw UsageError("--tau0-ms must be a multiple of --tau-ms");
  return MaskSpec(tau, tau0);
}

// CW_SEED, when set, replaces every configured seed.
std::uint64_t resolve_seed(std::uint64_t configured) {
  if (const char* env = std::getenv("CW_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("CW_SEED is not an unsigned integer: ") + env);
  }
  return configured;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, j.dump(2) + "\n");
}

json ops_json(const OpCounter& ops) {
  return {{"projection_macs", ops.projection_macs}, {"dot_product_macs", ops.dot_product_macs},
          {"value_macs", ops.value_macs},           {"other_macs", ops.other_macs},
          {"total_macs", ops.total_macs()},         {"cache_bytes", ops.cache_bytes}};
}

// ---- stream ------------------------------------------------------------------------

struct StreamArgs {
  std::string model;
  std::string adapters;
  std::vector<std::string> features;
  std::string out_dir = "out";
  std::size_t tau_ms = 100;
  std::size_t tau0_ms = 600;
  std::string mode = "greedy";
  std::size_t beam = 5;
  std::size_t window = 2;
  std::size_t max_tokens = 48;
  bool self_cache = false;
  std::string clock = "wall";
  std::size_t dump_topk = 0;
  std::size_t jobs = 1;
};

struct StreamOutput {
  StreamResult result;
  std::string topk;
};

StreamOutput stream_one(const ModelBundle& bundle, const Matrix& features, const RecognizerOptions& options,
                        std::size_t dump_topk) {
  StreamOutput out;
  if (dump_topk == 0) {
    out.result = run_stream(bundle.weights, features, options);
    return out;
  }
  StreamingRecognizer rec(bundle.weights, options);
  std::ostringstream topk_lines;
  for (const Matrix& chunk : split_chunks(features, options.spec)) {
    const TimelineEvent& ev = rec.push_chunk(chunk);
    const auto dist = rec.next_distribution();
    json top = json::array();
    for (std::size_t id : topk(dist, std::min(dump_topk, dist.size()))) {
      top.push_back({{"id", id}, {"word", id < bundle.vocab.size() ? bundle.vocab[id] : ""}, {"logprob", dist[id]}});
    }
    topk_lines << json{{"k", ev.chunk}, {"time_ms", ev.time_ms}, {"prefix", ev.tokens}, {"top", top}}.dump() << "\n";
  }
  out.result.transcript = rec.finish();
  if (options.mode == DecodeMode::kGreedy) out.result.timestamps = rec.word_timestamps();
  out.result.timeline = rec.timeline();
  out.result.chunk_seconds = rec.chunk_seconds();
  out.result.audio_seconds = rec.audio_seconds();
  out.result.ops = rec.ops();
  out.topk = topk_lines.str();
  return out;
}

int cmd_stream(const StreamArgs& a) {
  RecognizerOptions options;
  options.spec = spec_from_ms(a.tau_ms, a.tau0_ms);
  if (a.mode != "greedy" && a.mode != "beam") throw UsageError("--mode must be greedy or beam");
  options.mode = a.mode == "greedy" ? DecodeMode::kGreedy : DecodeMode::kBeam;
  if (a.beam == 0) throw UsageError("--beam must be >= 1");
  options.decode.beam = a.beam;
  options.decode.window = a.window;
  options.decode.max_tokens = a.max_tokens;
  options.self_cache = a.self_cache;
  options.clock = a.clock == "counted" ? ClockMode::kCounted : ClockMode::kWall;
  if (a.jobs == 0) throw UsageError("--jobs must be >= 1");

  ModelBundle bundle = load_model(a.model);
  if (!a.adapters.empty()) bundle.weights = apply_lora(bundle.weights, load_adapters(a.adapters));

  std::vector<std::optional<StreamOutput>> results(a.features.size());
  std::vector<std::exception_ptr> errors(a.features.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < a.features.size(); i = next++) {
      try {
        results[i] = stream_one(bundle, read_tensor(a.features[i]), options, a.dump_topk);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::min(a.jobs, a.features.size()); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Flush in input order; the first failure wins.
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    const StreamOutput& o = *results[i];
    const std::string stem = fs::path(a.features[i]).stem().string();
    const fs::path base = fs::path(a.out_dir) / stem;
    write_timeline(fs::path(base.string() + ".timeline.jsonl"), o.result.timeline, bundle.vocab);
    const std::string text = detokenize(bundle.vocab, o.result.transcript);
    write_file(base.string() + ".txt", text + "\n");
    json words = json::array();
    for (const auto& w : o.result.timestamps) {
      words.push_back({{"w", detokenize(bundle.vocab, std::vector<TokenId>{w.token})},
                       {"id", w.token},
                       {"start_ms", w.start_ms},
                       {"end_ms", w.end_ms}});
    }
    write_json(base.string() + ".timestamps.json", {{"words", words}});
    write_json(base.string() + ".stats.json", {{"clock", a.clock},
                                               {"chunk_seconds", o.result.chunk_seconds},
                                               {"audio_seconds", o.result.audio_seconds},
                                               {"ops", ops_json(o.result.ops)}});
    if (a.dump_topk > 0) write_file(base.string() + ".topk.jsonl", o.topk);
    std::cout << stem << ": " << text << "\n";
  }
  return 0;
}

// ---- score -------------------------------------------------------------------------

struct ScoreArgs {
  std::string timeline;
  std::string reference;
  std::string reference_file;
  std::string alignment;
  std::string timestamps;
  std::string stats;
  std::string out;
  double threshold_ms = 240.0;
  std::int64_t exclude_ms = 600;
  bool require_arwer = false;
};

std::vector<TimedWord> read_timestamps(const fs::path& path) {
  std::vector<TimedWord> out;
  try {
    const json j = json::parse(read_file(path));
    for (const auto& w : j.at("words"))
      out.push_back({w.at("w").get<std::string>(), w.at("start_ms").get<std::int64_t>(), w.at("end_ms").get<std::int64_t>()});
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return out;
}

RuntimeStats read_stats(const fs::path& path) {
  try {
    const json j = json::parse(read_file(path));
    return {j.at("chunk_seconds").get<std::vector<double>>(), j.at("audio_seconds").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

int cmd_score(const ScoreArgs& a) {
  if (a.require_arwer && a.alignment.empty()) throw UsageError("--arwer needs --alignment");
  if ((!a.timestamps.empty()) && a.alignment.empty()) throw UsageError("--timestamps needs --alignment");

  std::optional<AlignmentFile> alignment;
  if (!a.alignment.empty()) alignment = read_alignment(a.alignment);
  std::vector<std::string> reference;
  if (!a.reference.empty()) reference = tokenize_words(a.reference);
  else if (!a.reference_file.empty()) reference = tokenize_words(read_file(a.reference_file));
  else if (alignment) {
    for (const auto& w : alignment->reference.word_list()) {
      auto t = tokenize_words(w);
      reference.insert(reference.end(), t.begin(), t.end());
    }
  } else {
    throw UsageError("score needs --reference, --reference-file or --alignment");
  }

  const auto lines = read_timeline(a.timeline);
  if (lines.empty()) throw FormatError(a.timeline + ": empty timeline");
  std::vector<HypothesisEvent> events;
  for (const auto& l : lines) events.push_back({l.event.time_ms, tokenize_words(l.text)});

  json report;
  report["wer"] = wer(reference, events.back().words);
  report["rwer"] = rwer(reference, events);
  std::optional<double> arwer_value, precision, recall, sd, ed, rtf, latency;
  if (alignment) {
    ReferenceAlignment ref = alignment->reference;
    for (auto& w : ref.words) {
      const auto folded = tokenize_words(w.word);
      w.word = folded.empty() ? "" : folded.front();
    }
    arwer_value = arwer(ref, events);
    if (!a.timestamps.empty()) {
      auto hyp = read_timestamps(a.timestamps);
      for (auto& w : hyp) {
        const auto folded = tokenize_words(w.word);
        w.word = folded.empty() ? "" : folded.front();
      }
      const auto t = timestamp_metrics(ref, hyp, a.threshold_ms, a.exclude_ms);
      precision = t.precision;
      recall = t.recall;
      sd = t.sd_ms;
      ed = t.ed_ms;
    }
  }
  if (!a.stats.empty()) {
    const auto summary = rtf_stats(read_stats(a.stats));
    rtf = summary.mean_rtf;
    latency = summary.mean_latency_s;
  }
  report["arwer"] = number_or_null(arwer_value);
  report["precision"] = number_or_null(precision);
  report["recall"] = number_or_null(recall);
  report["sd_ms"] = number_or_null(sd);
  report["ed_ms"] = number_or_null(ed);
  report["rtf"] = number_or_null(rtf);
  report["latency_s"] = number_or_null(latency);
  if (!a.out.empty()) write_json(a.out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---- bench -------------------------------------------------------------------------

struct BenchArgs {
  std::size_t frames = 1500;
  std::size_t d = 64;
  std::size_t layers = 1;
  std::size_t tau_ms = 300;
  std::size_t tau0_ms = 300;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  bool no_padded = false;
  std::string clock = "wall";
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  const MaskSpec spec = spec_from_ms(a.tau_ms, a.tau0_ms);
  ModelConfig c;
  c.d = a.d;
  c.layers_enc = a.layers;
  c.layers_dec = 1;
  c.t_max = std::max<std::size_t>(c.t_max, a.frames);
  c.seed = resolve_seed(a.seed);
  const ModelWeights w = init_weights(c);
  const BenchReport r = run_bench(w, spec, a.frames, a.trials, c.seed, !a.no_padded);

  const bool counted = a.clock == "counted";
  auto strategy = [&](const StrategyCost& s) {
    json j = {{"ops", ops_json(s.ops)}};
    // Counted clock: seconds derived from MACs at 1 GMAC/s, so reports are reproducible.
    j["median_seconds"] = counted ? static_cast<double>(s.ops.total_macs()) / 1e9 : s.median_seconds();
    return j;
  };
  json report = {{"frames", r.frames},
                 {"d", r.d},
                 {"layers", r.layers},
                 {"tau", spec.tau()},
                 {"tau0", spec.tau0()},
                 {"trials", a.trials},
                 {"clock", a.clock},
                 {"closed_form_dot_product_macs", r.closed_form_dot_macs},
                 {"closed_form_matches", r.cached.ops.dot_product_macs == r.closed_form_dot_macs},
                 {"cache_floats", r.cache_floats},
                 {"max_abs_diff_cached_vs_recompute", r.max_abs_diff},
                 {"cached", strategy(r.cached)},
                 {"recompute", strategy(r.recompute)}};
  if (!a.no_padded) report["padded"] = strategy(r.padded);
  if (!a.out.empty()) write_json(a.out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---- finetune ----------------------------------------------------------------------

struct FinetuneArgs {
  std::string model;
  std::string data;
  std::string config;
  std::string init_adapters;
  std::string out = "finetuned";
};

TrainConfig read_train_config(const fs::path& path) {
  TrainConfig cfg;
  try {
    const json j = json::parse(read_file(path));
    cfg.spec = spec_from_ms(j.value("tau_ms", std::size_t{100}), j.value("tau0_ms", std::size_t{600}));
    const std::string opt = j.value("optimizer", std::string("sgd"));
    if (opt != "sgd" && opt != "adam") throw UsageError(path.string() + ": optimizer must be sgd or adam");
    cfg.optimizer = opt == "adam" ? Optimizer::kAdam : Optimizer::kGradientDescent;
    cfg.f_hat = j.value("f_hat", cfg.f_hat);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.fd_epsilon = j.value("fd_epsilon", cfg.fd_epsilon);
    cfg.max_grad_norm = j.value("max_grad_norm", cfg.max_grad_norm);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("lora")) {
      const json& l = j.at("lora");
      cfg.lora.rank = l.value("rank", cfg.lora.rank);
      cfg.lora.alpha = l.value("alpha", cfg.lora.alpha);
      cfg.lora.encoder_self = l.value("encoder_self", cfg.lora.encoder_self);
      cfg.lora.decoder_self = l.value("decoder_self", cfg.lora.decoder_self);
      cfg.lora.decoder_cross = l.value("decoder_cross", cfg.lora.decoder_cross);
      cfg.lora.seed = l.value("seed", cfg.lora.seed);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  cfg.seed = resolve_seed(cfg.seed);
  cfg.lora.seed = resolve_seed(cfg.lora.seed);
  return cfg;
}

int cmd_finetune(const FinetuneArgs& a) {
  const TrainConfig cfg = read_train_config(a.config);
  const ModelBundle bundle = load_model(a.model);
  const auto dataset = load_dataset(a.data);
  std::optional<LoraSet> initial;
  if (!a.init_adapters.empty()) initial = load_adapters(a.init_adapters);
  const TrainResult r = finetune_run(bundle.weights, dataset, cfg, initial ? &*initial : nullptr);
  save_adapters(fs::path(a.out) / "adapters", r.adapters);
  write_loss_csv(fs::path(a.out) / "loss.csv", r.trace);
  std::cout << "steps " << r.trace.size();
  if (!r.trace.empty()) std::cout << " final loss " << std::setprecision(6) << r.trace.back().loss;
  std::cout << "\n";
  return 0;
}

// ---- gen-toy -----------------------------------------------------------------------

struct GenToyArgs {
  std::string out = "toy";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> data_seed;
  std::size_t d = 16;
  std::size_t layers = 2;
  std::size_t vocab = 32;
  std::size_t utterances = 8;
  std::size_t min_words = 1;
  std::size_t max_words = 4;
  std::vector<TokenId> words;
  std::size_t frames_per_word = 40;
  std::size_t tail_frames = 30;
};

int cmd_gen_toy(const GenToyArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const std::uint64_t data_seed = resolve_seed(a.data_seed.value_or(a.seed));
  ModelConfig c;
  c.d = a.d;
  c.layers_enc = c.layers_dec = a.layers;
  c.vocab = a.vocab;
  c.seed = seed;
  const auto vocab = toy_vocabulary(a.vocab);
  const fs::path out(a.out);
  save_model(out / "model", init_weights(c), vocab);

  SyntheticOptions o;
  o.d = a.d;
  o.vocab = a.vocab;
  o.frames_per_word = a.frames_per_word;
  o.tail_frames = a.tail_frames;
  std::vector<SyntheticUtterance> corpus;
  if (!a.words.empty()) {
    for (TokenId t : a.words) {
      if (t < kFirstWordToken || static_cast<std::size_t>(t) >= a.vocab)
        throw UsageError("--words: id " + std::to_string(t) + " outside the word range");
    }
    for (std::size_t i = 0; i < a.utterances; ++i)
      corpus.push_back(make_word_utterance(a.words, vocab, o, data_seed + i, "utt" + std::to_string(i)));
  } else {
    corpus = make_corpus(a.utterances, vocab, o, a.min_words, a.max_words, data_seed);
  }

  const fs::path data = out / "data";
  std::vector<DatasetEntry> entries;
  for (const auto& s : corpus) {
    const std::string id = s.utterance.id;
    write_tensor(data / (id + ".cwt"), s.utterance.features);
    write_alignment(data / (id + ".align.json"), {s.reference, s.utterance.tokens});
    write_file(data / (id + ".txt"), s.text + "\n");
    entries.push_back({id, id + ".cwt", id + ".align.json"});
  }
  write_dataset_manifest(data, entries);
  std::cout << "wrote model and " << corpus.size() << " utterances to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming encoder-decoder toolkit: chunked inference, scoring, benchmarks, fine-tuning"};
  app.require_subcommand(1);

  StreamArgs sa;
  auto* stream = app.add_subcommand("stream", "Decode feature files chunk by chunk");
  stream->add_option("--model", sa.model, "Model manifest or directory")->required();
  stream->add_option("--adapters", sa.adapters, "LoRA adapters to merge before decoding");
  stream->add_option("features", sa.features, "Feature tensor files")->required();
  stream->add_option("--out-dir", sa.out_dir, "Output directory")->capture_default_str();
  stream->add_option("--tau-ms", sa.tau_ms, "Chunk size in ms")->capture_default_str();
  stream->add_option("--tau0-ms", sa.tau0_ms, "Initial chunk size in ms")->capture_default_str();
  stream->add_option("--mode", sa.mode, "greedy or beam")->capture_default_str();
  stream->add_option("--beam", sa.beam, "Beam size b")->capture_default_str();
  stream->add_option("--window", sa.window, "Stability window n")->capture_default_str();
  stream->add_option("--max-tokens", sa.max_tokens, "Hypothesis length cap")->capture_default_str();
  stream->add_flag("--self-cache", sa.self_cache, "Use the approximate decoder self-attention cache");
  stream->add_option("--clock", sa.clock, "wall or counted")
      ->check(CLI::IsMember({"wall", "counted"}))
      ->capture_default_str();
  stream->add_option("--dump-topk", sa.dump_topk, "Write the top-k next-token distribution per chunk");
  stream->add_option("--jobs", sa.jobs, "Parallel streams")->capture_default_str();

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Score a timeline against a reference");
  score->add_option("--timeline", sc.timeline, "Timeline JSONL")->required();
  score->add_option("--reference", sc.reference, "Reference text");
  score->add_option("--reference-file", sc.reference_file, "Reference text file");
  score->add_option("--alignment", sc.alignment, "Alignment JSON (enables ARWER)");
  score->add_option("--timestamps", sc.timestamps, "Word timestamps JSON from stream");
  score->add_option("--stats", sc.stats, "Runtime stats JSON from stream");
  score->add_option("--threshold-ms", sc.threshold_ms, "Timestamp hit threshold")->capture_default_str();
  score->add_option("--exclude-ms", sc.exclude_ms, "Ignore words ending before this time")->capture_default_str();
  score->add_flag("--arwer", sc.require_arwer, "Fail unless ARWER can be computed");
  score->add_option("--out", sc.out, "Report JSON path");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Compare cached streaming with recomputation");
  bench->add_option("--frames", ba.frames, "Stream length T in frames")->capture_default_str();
  bench->add_option("--d", ba.d, "Model dimension")->capture_default_str();
  bench->add_option("--layers", ba.layers, "Encoder layers")->capture_default_str();
  bench->add_option("--tau-ms", ba.tau_ms, "Chunk size in ms")->capture_default_str();
  bench->add_option("--tau0-ms", ba.tau0_ms, "Initial chunk size in ms")->capture_default_str();
  bench->add_option("--trials", ba.trials, "Timed repetitions")->capture_default_str();
  bench->add_option("--seed", ba.seed, "Weights and input seed")->capture_default_str();
  bench->add_flag("--no-padded", ba.no_padded, "Skip the padded non-causal strategy");
  bench->add_option("--clock", ba.clock, "wall or counted")
      ->check(CLI::IsMember({"wall", "counted"}))
      ->capture_default_str();
  bench->add_option("--out", ba.out, "Report JSON path");

  FinetuneArgs fa;
  auto* finetune = app.add_subcommand("finetune", "Train LoRA adapters on sampled chunk boundaries");
  finetune->add_option("--model", fa.model, "Model manifest or directory")->required();
  finetune->add_option("--data", fa.data, "Dataset directory")->required();
  finetune->add_option("--config", fa.config, "Training config JSON")->required();
  finetune->add_option("--init-adapters", fa.init_adapters, "Starting adapters");
  finetune->add_option("--out", fa.out, "Output directory")->capture_default_str();

  GenToyArgs ga;
  auto* gen = app.add_subcommand("gen-toy", "Write a seeded toy model and synthetic aligned dataset");
  gen->add_option("--out", ga.out, "Output directory")->capture_default_str();
  gen->add_option("--seed", ga.seed, "Model seed")->capture_default_str();
  gen->add_option("--data-seed", ga.data_seed, "Synthetic data seed (defaults to --seed)");
  gen->add_option("--d", ga.d, "Model dimension")->capture_default_str();
  gen->add_option("--layers", ga.layers, "Encoder and decoder layers")->capture_default_str();
  gen->add_option("--vocab", ga.vocab, "Vocabulary size")->capture_default_str();
  gen->add_option("--utterances", ga.utterances, "Utterance count")->capture_default_str();
  gen->add_option("--min-words", ga.min_words, "Fewest words per utterance")->capture_default_str();
  gen->add_option("--max-words", ga.max_words, "Most words per utterance")->capture_default_str();
  gen->add_option("--words", ga.words, "Fixed token ids for every utterance");
  gen->add_option("--frames-per-word", ga.frames_per_word, "Frames per word")->capture_default_str();
  gen->add_option("--tail-frames", ga.tail_frames, "Trailing silence frames")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (*stream) return cmd_stream(sa);
    if (*score) return cmd_score(sc);
    if (*bench) return cmd_bench(ba);
    if (*finetune) return cmd_finetune(fa);
    if (*gen) return cmd_gen_toy(ga);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const FormatError& e) {
    std::cerr << "format error at byte " << e.byte_offset() << ": " << e.what() << "\n";
    return static_cast<int>(ExitCode::kFormat);
  } catch (const TrainingError& e) {
    std::cerr << "training diverged at step " << e.step() << ": " << e.what() << "\n";
    return static_cast<int>(ExitCode::kNumeric);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kNumeric);
  } catch (const InsufficientInputError& e) {
    std::cerr << "insufficient input: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kFailure);
  }
  return static_cast<int>(ExitCode::kUsage);
}
