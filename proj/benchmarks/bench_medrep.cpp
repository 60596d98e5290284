#include <benchmark/benchmark.h>

#include <vector>

#include "medrep/autodiff.hpp"
#include "medrep/beam.hpp"
#include "medrep/lstm.hpp"
#include "medrep/metrics.hpp"
#include "medrep/pipeline.hpp"
#include "medrep/rng.hpp"
#include "medrep/synthetic.hpp"

using namespace medrep;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor::matrix(rows, cols, std::move(v));
}

// A small trained-shape model over a synthetic corpus, built once.
struct Fixture {
  DatasetSplit data;
  Vocabulary vocab, keyword_vocab;
  RunConfig config;
  ModelParams params;
  std::vector<EncodedSample> encoded;

  Fixture()
      : data(generate(SyntheticSpec{.num_samples = 400})),
        vocab(build_report_vocab(data.train)),
        keyword_vocab(build_keyword_vocab(data.train)),
        config(make_config()),
        params(ModelParams::initialize(
            architecture_for(config, data.train.front().features.size(), vocab, keyword_vocab),
            config.seed)) {
    for (const auto& s : data.train)
      encoded.push_back(encode_sample(s, vocab, keyword_vocab, config.max_len));
  }

  static RunConfig make_config() {
    RunConfig c;
    c.embedding_size = 64;
    c.hidden_size = 64;
    c.max_len = 30;
    return c;
  }

  static const Fixture& get() {
    static const Fixture f;
    return f;
  }
};

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random_tensor(n, n, rng), b = random_tensor(n, n, rng);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Var y = ad::sum(ad::matmul(tape.parameter(a), tape.parameter(b)));
    tape.backward(y);
    benchmark::DoNotOptimize(tape.gradient(a));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(128)->Arg(256);

void BM_LstmStep(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto cell = LstmCellParams::glorot(300, 256, rng);
  Tensor x = random_tensor(rows, 300, rng);
  for (auto _ : state) {
    ad::Tape tape;
    const LstmState s = lstm_step(tape.constant(x), zero_state(tape, rows, 256), cell);
    benchmark::DoNotOptimize(s.h.value());
  }
}
BENCHMARK(BM_LstmStep)->Arg(1)->Arg(64);

void BM_TrainBatch(benchmark::State& state) {
  const auto& f = Fixture::get();
  ModelParams params = f.params;
  std::vector<const EncodedSample*> batch;
  for (std::size_t i = 0; i < 64 && i < f.encoded.size(); ++i) batch.push_back(&f.encoded[i]);
  auto tracked = params.tensors();
  Rng dropout(3);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Var loss = sequence_loss(tape, params, batch, 0.5, &dropout);
    ad::backward(loss, tracked);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_TrainBatch)->Unit(benchmark::kMillisecond);

void BM_BeamDecode(benchmark::State& state) {
  const auto& f = Fixture::get();
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto& s = f.encoded.front();
  const ReportScorer model(f.params, s.features, s.keywords);
  const auto options = report_search_options(f.vocab.size(), f.config.max_len, k);
  for (auto _ : state) benchmark::DoNotOptimize(beam_decode(model, options));
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EvaluateCorpus(benchmark::State& state) {
  const auto& f = Fixture::get();
  std::vector<Caption> candidates;
  std::vector<ReferenceSet> references;
  for (std::size_t i = 0; i < f.data.train.size(); ++i) {
    const auto& next = f.data.train[(i + 1) % f.data.train.size()];
    candidates.push_back(split_whitespace(next.report));
    references.push_back({split_whitespace(f.data.train[i].report)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_corpus(candidates, references));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(candidates.size()));
}
BENCHMARK(BM_EvaluateCorpus)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro libbenchmark_main.a ships LTO bytecode from another compiler
// version, so the main comes from the macro instead.
BENCHMARK_MAIN();
