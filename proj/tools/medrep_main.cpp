// medrep: synthetic data, training, generation, scoring and fusion ablation.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>

#include "medrep/errors.hpp"
#include "medrep/pipeline.hpp"

namespace {

using namespace medrep;

// Flags shared by train and ablate. Optionals so that only flags actually
// given override the config file / environment.
struct RunFlags {
  std::optional<std::string> config_file, dataset, output_dir, fusion, decoder_mode, optimizer;
  std::optional<std::size_t> embedding, hidden, epochs, batch, max_len, beam_k;
  std::optional<double> lr, dropout;
  std::optional<std::uint64_t> seed;
  bool length_normalize = false, bleu_smoothing = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "flat key=value config file");
    cmd->add_option("--dataset", dataset, "dataset JSONL (env MEDREP_DATASET)");
    cmd->add_option("--output-dir", output_dir, "output directory (env MEDREP_OUTPUT_DIR)");
    cmd->add_option("--fusion", fusion, "lstm-context | average | sum | mul | none");
    cmd->add_option("--decoder-mode", decoder_mode, "causal | bi-prefix");
    cmd->add_option("--optimizer", optimizer, "adam | sgd");
    cmd->add_option("--embedding-size,-E", embedding, "embedding size E");
    cmd->add_option("--hidden-size,-H", hidden, "hidden size H");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch", batch, "minibatch size");
    cmd->add_option("--max-len", max_len, "sequence length incl. START/END");
    cmd->add_option("--beam-k", beam_k, "beam width");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--dropout", dropout, "dropout rate in [0,1)");
    cmd->add_option("--seed", seed, "seed for init, shuffling and dropout");
    cmd->add_flag("--length-normalize", length_normalize, "rank beams by mean log-prob");
    cmd->add_flag("--bleu-smoothing", bleu_smoothing, "add-one smoothing for BLEU orders >= 2");
  }

  // CLI flags > environment (paths only) > config file > defaults.
  RunConfig resolve() const {
    RunConfig c;
    if (config_file) apply_config_file(c, *config_file);
    apply_environment(c);
    const auto set = [&c](const char* key, const auto& v) {
      if (v) apply_setting(c, key, to_text(*v));
    };
    set("dataset", dataset);
    set("output_dir", output_dir);
    set("fusion", fusion);
    set("decoder_mode", decoder_mode);
    set("optimizer", optimizer);
    set("embedding_size", embedding);
    set("hidden_size", hidden);
    set("epochs", epochs);
    set("batch_size", batch);
    set("max_len", max_len);
    set("beam_k", beam_k);
    set("lr", lr);
    set("dropout", dropout);
    set("seed", seed);
    if (length_normalize) c.length_normalize = true;
    if (bleu_smoothing) c.bleu_smoothing = true;
    c.validate();
    return c;
  }

  static std::string to_text(const std::string& s) { return s; }
  template <class T>
  static std::string to_text(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    } else {
      return std::to_string(v);
    }
  }
};

std::filesystem::path dataset_path(const std::optional<std::string>& flag) {
  RunConfig c;
  apply_environment(c);
  return flag ? std::filesystem::path(*flag) : c.dataset;
}

int run(int argc, char** argv) {
  CLI::App app{"medrep - keyword-driven report generation"};
  app.require_subcommand(1);

  // gen-data
  SyntheticSpec spec;
  std::string data_out = "data/dataset.jsonl";
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--samples", spec.num_samples, "number of samples")->capture_default_str();
  gen->add_option("--diseases", spec.num_diseases, "number of disease classes")->capture_default_str();
  gen->add_option("--feature-dim", spec.feature_dim, "image feature size F")->capture_default_str();
  gen->add_option("--noise", spec.noise_std, "feature noise std")->capture_default_str();
  gen->add_option("--coverage", spec.keyword_coverage, "keyword coverage in [0,1]")->capture_default_str();
  gen->add_option("--keywords-min", spec.keywords_min, "min keywords per sample")->capture_default_str();
  gen->add_option("--keywords-max", spec.keywords_max, "max keywords per sample")->capture_default_str();
  gen->add_option("--feature-scale", spec.feature_scale, "one-hot bump height")->capture_default_str();
  gen->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  gen->add_option("--out,-o", data_out, "output JSONL path")->capture_default_str();

  // train
  RunFlags train_flags;
  std::optional<std::string> ckpt_out, trace_out;
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  train_flags.attach(train);
  train->add_option("--checkpoint", ckpt_out, "checkpoint path (default <output-dir>/model.ckpt)");
  train->add_option("--trace", trace_out, "loss trace path (default <output-dir>/trace.json)");

  // generate
  std::string gen_ckpt, gen_split = "test", gen_out = "candidates.jsonl";
  std::optional<std::string> gen_dataset;
  std::optional<std::size_t> gen_beam;
  bool gen_greedy = false;
  auto* generate = app.add_subcommand("generate", "generate reports with beam search");
  generate->add_option("--checkpoint", gen_ckpt, "checkpoint path")->required();
  generate->add_option("--dataset", gen_dataset, "dataset JSONL (env MEDREP_DATASET)");
  generate->add_option("--split", gen_split, "train | val | test")->capture_default_str();
  generate->add_option("--beam-k", gen_beam, "beam width (default: checkpoint config)");
  generate->add_flag("--greedy", gen_greedy, "greedy decoding instead of beam search");
  generate->add_option("--out,-o", gen_out, "candidates JSONL path")->capture_default_str();

  // evaluate
  std::string eval_cands, eval_split = "test";
  std::optional<std::string> eval_dataset, eval_out;
  bool eval_smoothing = false;
  auto* evaluate = app.add_subcommand("evaluate", "score candidates against references");
  evaluate->add_option("--candidates", eval_cands, "candidates JSONL")->required();
  evaluate->add_option("--dataset", eval_dataset, "reference dataset JSONL (env MEDREP_DATASET)");
  evaluate->add_option("--split", eval_split, "train | val | test")->capture_default_str();
  evaluate->add_flag("--bleu-smoothing", eval_smoothing, "add-one smoothing for BLEU orders >= 2");
  evaluate->add_option("--out,-o", eval_out, "also write the metrics JSON here");

  // ablate
  RunFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "train and score every fusion strategy");
  ablate_flags.attach(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  if (gen->parsed()) {
    std::cout << cmd_gen_data(spec, data_out) << '\n';
  } else if (train->parsed()) {
    const RunConfig c = train_flags.resolve();
    const auto ckpt = ckpt_out ? std::filesystem::path(*ckpt_out) : c.output_dir / "model.ckpt";
    const auto trace = trace_out ? std::filesystem::path(*trace_out) : c.output_dir / "trace.json";
    const auto result = cmd_train(c, ckpt, trace, [](std::size_t epoch, double loss) {
      std::cerr << "epoch " << epoch << " mean loss " << loss << '\n';
    });
    std::cerr << "uniform-model loss " << result.result.uniform_loss << '\n';
    std::cout << result.checkpoint.string() << '\n';
  } else if (generate->parsed()) {
    const auto split = parse_split(gen_split);
    const std::size_t k = gen_beam ? *gen_beam : load_checkpoint(gen_ckpt).config.beam_k;
    const auto reports =
        cmd_generate(gen_ckpt, dataset_path(gen_dataset), split, k, gen_greedy, gen_out);
    std::cerr << "wrote " << reports.size() << " reports to " << gen_out << '\n';
  } else if (evaluate->parsed()) {
    const auto report = cmd_evaluate(eval_cands, dataset_path(eval_dataset),
                                     parse_split(eval_split), eval_smoothing);
    const std::string text = to_json(report);
    std::cout << text << '\n';
    if (eval_out) {
      std::ofstream f(*eval_out);
      if (!f) throw FileError("cannot write " + *eval_out);
      f << text << '\n';
    }
  } else if (ablate->parsed()) {
    const RunConfig c = ablate_flags.resolve();
    const auto rows = cmd_ablate(c, [](const AblationRow& row) {
      std::cerr << to_string(row.fusion) << ": bleu_avg " << row.metrics.bleu_avg << '\n';
    });
    std::cout << ablation_markdown(rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const medrep::Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: file: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
  }
  return 1;
}
