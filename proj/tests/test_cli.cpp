#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "chunkwise/bench.hpp"
#include "chunkwise/errors.hpp"
#include "chunkwise/metrics.hpp"
#include "chunkwise/tensor_io.hpp"
#include "temp_dir.hpp"

using namespace chunkwise;

namespace {

int run(const std::string& args) {
  const int status = std::system((std::string(CW_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("streaming dot-product closed form") {
  CHECK(streaming_dot_product_macs(32, MaskSpec(4, 4), 8) == 4608);
  CHECK(streaming_dot_product_macs(64, MaskSpec(8, 8), 16) == 64 * 64 * 16 / 2 + 64 * 8 * 16 / 2);
  // Larger initial chunk: 8^2 + 4 * 12 + 4 * 16, times d.
  CHECK(streaming_dot_product_macs(16, MaskSpec(4, 8), 1) == 64 + 48 + 64);
}

TEST_CASE("bench strategies") {
  ModelConfig c;
  c.d = 8;
  c.layers_enc = 2;
  c.layers_dec = 1;
  c.seed = 3;
  const ModelWeights w = init_weights(c);
  const BenchReport r = run_bench(w, MaskSpec(4, 8), 24, 2, 1);
  CHECK(r.cached.ops.dot_product_macs == r.closed_form_dot_macs);
  CHECK(r.cached.ops.total_macs() < r.recompute.ops.total_macs());
  CHECK(r.cached.ops.total_macs() < r.padded.ops.total_macs());
  CHECK(r.max_abs_diff <= 1e-5);
  CHECK(r.cached.seconds.size() == 2);
  CHECK(r.cache_floats == 2 * 24 * 8 * 2);
  CHECK(run_bench(w, MaskSpec(4, 8), 24, 1, 1).cached.ops == r.cached.ops);
  CHECK_THROWS_AS(run_bench(w, MaskSpec(4, 8), 26, 1, 1), UsageError);
}

TEST_CASE("cli exit codes and reports") {
  testutil::TempDir dir;
  const std::string d = dir.path().string();
  REQUIRE(run("gen-toy --out " + d + "/toy --seed 2 --utterances 2 --max-words 2") == 0);
  const std::string model = d + "/toy/model", feats = d + "/toy/data/utt0.cwt";

  CHECK(run("") == 2);
  CHECK(run("stream --model " + model + " --tau-ms 30 " + feats) == 2);
  CHECK(run("stream --model " + model + " --tau-ms 100 --tau0-ms 540 " + feats) == 2);
  CHECK(run("stream --model " + model + " --tau0-ms 20000 " + feats) == 2);

  write_file(d + "/bad.cwt", "CWTF garbage");
  CHECK(run("stream --model " + model + " " + d + "/bad.cwt") == 3);
  CHECK(run("bench --frames 30 --d 8 --tau-ms 80 --tau0-ms 80 --trials 1") == 2);

  REQUIRE(run("stream --model " + model + " --clock counted --out-dir " + d + "/out " + feats) == 0);
  CHECK(read_timeline(d + "/out/utt0.timeline.jsonl").size() > 1);
  CHECK(run("score --arwer --timeline " + d + "/out/utt0.timeline.jsonl --reference-file " + d + "/toy/data/utt0.txt") == 2);

  REQUIRE(run("score --timeline " + d + "/out/utt0.timeline.jsonl --alignment " + d +
              "/toy/data/utt0.align.json --timestamps " + d + "/out/utt0.timestamps.json --stats " + d +
              "/out/utt0.stats.json --out " + d + "/score.json") == 0);
  const auto report = nlohmann::json::parse(read_file(d + "/score.json"));
  for (const char* key : {"wer", "rwer", "arwer", "precision", "recall", "sd_ms", "ed_ms", "rtf", "latency_s"})
    CHECK(report.contains(key));
  // The report agrees with direct library calls.
  const auto lines = read_timeline(d + "/out/utt0.timeline.jsonl");
  std::vector<HypothesisEvent> events;
  for (const auto& l : lines) events.push_back({l.event.time_ms, tokenize_words(l.text)});
  const auto ref = read_alignment(d + "/toy/data/utt0.align.json").reference;
  CHECK(report["rwer"].get<double>() == rwer(ref.word_list(), events));
  CHECK(report["arwer"].get<double>() == arwer(ref, events));

  write_file(d + "/diverge.json", R"({"learning_rate": 1e30, "max_steps": 3, "lora": {"encoder_self": false}})");
  CHECK(run("finetune --model " + model + " --data " + d + "/toy/data --config " + d + "/diverge.json --out " + d +
            "/ft") == 4);

  // lr = 0 leaves the starting adapters untouched, bit for bit.
  write_file(d + "/still.json", R"({"learning_rate": 0, "max_steps": 2, "lora": {"encoder_self": false}})");
  REQUIRE(run("finetune --model " + model + " --data " + d + "/toy/data --config " + d + "/still.json --out " + d +
              "/ft0") == 0);
  REQUIRE(run("finetune --model " + model + " --data " + d + "/toy/data --config " + d + "/still.json --init-adapters " +
              d + "/ft0/adapters --out " + d + "/ft1") == 0);
  CHECK(load_adapters(d + "/ft1/adapters") == load_adapters(d + "/ft0/adapters"));
  CHECK(read_file(d + "/ft0/loss.csv").find("step,utterance,point_frame,loss") == 0);
}
