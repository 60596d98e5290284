#include "medrep/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>

#include "medrep/beam.hpp"
#include "medrep/errors.hpp"

namespace medrep {

namespace {

using nlohmann::ordered_json;

std::vector<TokenList> report_corpus(std::span<const Sample> train) {
  std::vector<TokenList> out;
  out.reserve(train.size());
  for (const auto& s : train) out.push_back(normalize(s.report));
  return out;
}

std::vector<TokenList> keyword_corpus(std::span<const Sample> train) {
  std::vector<TokenList> out;
  out.reserve(train.size());
  for (const auto& s : train) out.push_back(keyword_tokens(s));
  return out;
}

std::filesystem::path sibling(const std::filesystem::path& p, const std::string& suffix) {
  return std::filesystem::path(p.string() + suffix);
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

DatasetSplit read_existing_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FileError("dataset not found: " + path.string());
  return read_dataset(path);
}

std::string format_list(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > 20) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

ordered_json metrics_json(const MetricReport& r) { return ordered_json::parse(to_json(r, -1)); }

}  // namespace

TokenList keyword_tokens(const Sample& sample) {
  TokenList out;
  for (const auto& phrase : sample.keywords) {
    for (auto& t : normalize(phrase)) out.push_back(std::move(t));
  }
  return out;
}

Vocabulary build_report_vocab(std::span<const Sample> train) {
  return Vocabulary::build(report_corpus(train));
}

Vocabulary build_keyword_vocab(std::span<const Sample> train) {
  const auto reports = report_corpus(train);
  const auto keywords = keyword_corpus(train);
  return Vocabulary::build(reports, keywords, true);
}

EncodedSample encode_sample(const Sample& sample, const Vocabulary& vocab,
                            const Vocabulary& keyword_vocab, std::size_t max_len) {
  EncodedSample e;
  e.features = sample.features;
  e.keywords = keyword_vocab.ids(keyword_tokens(sample));
  e.report = encode(normalize(sample.report), vocab, max_len);
  return e;
}

Architecture architecture_for(const RunConfig& config, std::size_t feature_size,
                              const Vocabulary& vocab, const Vocabulary& keyword_vocab) {
  Architecture a;
  a.feature_size = feature_size;
  a.embedding_size = config.embedding_size;
  a.hidden_size = config.hidden_size;
  a.vocab_size = vocab.size();
  a.keyword_vocab_size = config.fusion == FusionStrategy::kNone ? 0 : keyword_vocab.size();
  a.fusion = config.fusion;
  a.mode = config.decoder_mode;
  return a;
}

TrainedModel train_model(const DatasetSplit& data, const RunConfig& config,
                         const EpochCallback& on_epoch) {
  config.validate();
  if (data.train.empty()) throw ContractError("dataset has no training samples");
  const std::size_t F = data.train.front().features.size();
  for (const auto& s : data.train) {
    if (s.features.size() != F) throw ShapeError("training samples disagree on feature size");
  }
  TrainedModel m{ModelParams{}, build_report_vocab(data.train),
                 build_keyword_vocab(data.train), {}};
  m.params = ModelParams::initialize(architecture_for(config, F, m.vocab, m.keyword_vocab),
                                     config.seed);
  std::vector<EncodedSample> encoded;
  encoded.reserve(data.train.size());
  for (const auto& s : data.train) {
    encoded.push_back(encode_sample(s, m.vocab, m.keyword_vocab, config.max_len));
  }
  m.trace = train(m.params, encoded, config.train_options(), on_epoch);
  return m;
}

std::vector<GeneratedReport> generate_reports(const ModelParams& params,
                                              const Vocabulary& vocab,
                                              const Vocabulary& keyword_vocab,
                                              std::span<const Sample> samples,
                                              const RunConfig& config, bool greedy) {
  if (vocab.size() != params.arch.vocab_size) {
    throw ContractError("report vocabulary has " + std::to_string(vocab.size()) +
                        " tokens, checkpoint expects " + std::to_string(params.arch.vocab_size));
  }
  if (params.arch.uses_keywords() && keyword_vocab.size() != params.arch.keyword_vocab_size) {
    throw ContractError("keyword vocabulary has " + std::to_string(keyword_vocab.size()) +
                        " tokens, checkpoint expects " +
                        std::to_string(params.arch.keyword_vocab_size));
  }
  SearchOptions options = report_search_options(vocab.size(), config.max_len, config.beam_k);
  options.length_normalize = config.length_normalize;
  std::vector<GeneratedReport> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const std::vector<TokenId> keywords = keyword_vocab.ids(keyword_tokens(s));
    const ReportScorer scorer(params, s.features, keywords);
    const Hypothesis best = greedy ? greedy_decode(scorer, options)
                                   : beam_decode(scorer, options).front();
    out.push_back({s.id, decode(best.tokens, vocab), best.log_prob});
  }
  return out;
}

MetricReport score_reports(std::span<const GeneratedReport> candidates,
                           std::span<const Sample> references, bool bleu_smoothing) {
  std::map<std::string, ReferenceSet> refs;
  std::vector<std::string> order;
  for (const auto& s : references) {
    auto [it, inserted] = refs.try_emplace(s.id);
    if (inserted) order.push_back(s.id);
    it->second.push_back(normalize(s.report));
  }
  std::map<std::string, const GeneratedReport*> cands;
  std::vector<std::string> duplicates, unknown;
  for (const auto& c : candidates) {
    if (!cands.emplace(c.id, &c).second) duplicates.push_back(c.id);
    if (!refs.contains(c.id)) unknown.push_back(c.id);
  }
  std::vector<std::string> missing;
  for (const auto& id : order) {
    if (!cands.contains(id)) missing.push_back(id);
  }
  if (order.empty() || candidates.empty() || missing.size() == order.size()) {
    throw ContractError("candidate and reference ids do not intersect");
  }
  if (!duplicates.empty()) throw ContractError("duplicate candidate ids: " + format_list(duplicates));
  if (!missing.empty()) throw ContractError("missing candidates for ids: " + format_list(missing));
  if (!unknown.empty()) throw ContractError("candidates for unknown ids: " + format_list(unknown));

  std::vector<Caption> cand_tokens;
  std::vector<ReferenceSet> ref_sets;
  for (const auto& id : order) {
    cand_tokens.push_back(split_whitespace(cands.at(id)->report));
    ref_sets.push_back(refs.at(id));
  }
  return evaluate_corpus(cand_tokens, ref_sets, bleu_smoothing);
}

std::string cmd_gen_data(const SyntheticSpec& spec, const std::filesystem::path& out) {
  if (spec.num_samples == 0) throw UsageError("--samples must be positive");
  try {
    spec.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  const DatasetSplit data = generate(spec);
  ensure_parent(out);
  write_dataset(data, out);
  return manifest_json(data);
}

TrainArtifacts cmd_train(const RunConfig& config, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& trace, const EpochCallback& on_epoch) {
  const DatasetSplit data = read_existing_dataset(config.dataset);
  TrainedModel m = train_model(data, config, on_epoch);

  ensure_parent(checkpoint);
  const auto vocab_path = sibling(checkpoint, ".vocab");
  const auto kw_path = sibling(checkpoint, ".kwvocab");
  m.vocab.save(vocab_path);
  m.keyword_vocab.save(kw_path);
  save_checkpoint({m.params, config,
                   {vocab_path.filename().string(), m.vocab.size()},
                   {kw_path.filename().string(), m.keyword_vocab.size()}},
                  checkpoint);

  ordered_json j;
  j["epoch_loss"] = m.trace.epoch_loss;
  j["batch_loss"] = m.trace.batch_loss;
  j["uniform_loss"] = m.trace.uniform_loss;
  j["fusion"] = to_string(config.fusion);
  j["seed"] = config.seed;
  ensure_parent(trace);
  std::ofstream out(trace, std::ios::binary);
  if (!out) throw FileError("cannot write trace " + trace.string());
  out << j.dump(2) << '\n';
  return {checkpoint, trace, std::move(m.trace)};
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  LoadedModel m{load_checkpoint(checkpoint), {}, {}};
  const auto dir = checkpoint.parent_path();
  m.vocab = Vocabulary::load(dir / m.checkpoint.vocab.file);
  m.keyword_vocab = Vocabulary::load(dir / m.checkpoint.keyword_vocab.file);
  const Architecture& a = m.checkpoint.params.arch;
  if (m.vocab.size() != m.checkpoint.vocab.size || m.vocab.size() != a.vocab_size) {
    throw ContractError("vocabulary " + m.checkpoint.vocab.file + " has " +
                        std::to_string(m.vocab.size()) + " tokens, checkpoint expects " +
                        std::to_string(a.vocab_size));
  }
  if (m.keyword_vocab.size() != m.checkpoint.keyword_vocab.size ||
      (a.uses_keywords() && m.keyword_vocab.size() != a.keyword_vocab_size)) {
    throw ContractError("keyword vocabulary " + m.checkpoint.keyword_vocab.file + " has " +
                        std::to_string(m.keyword_vocab.size()) +
                        " tokens, checkpoint expects " + std::to_string(a.keyword_vocab_size));
  }
  return m;
}

void write_candidates(std::span<const GeneratedReport> reports, const std::filesystem::path& out) {
  ensure_parent(out);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw FileError("cannot write candidates " + out.string());
  for (const auto& r : reports) {
    ordered_json j;
    j["id"] = r.id;
    j["report"] = r.report;
    j["log_prob"] = r.log_prob;
    f << j.dump() << '\n';
  }
  if (!f) throw FileError("failed writing candidates " + out.string());
}

std::vector<GeneratedReport> read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read candidates " + path.string());
  std::vector<GeneratedReport> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      GeneratedReport r;
      r.id = j.at("id").get<std::string>();
      r.report = j.at("report").get<std::string>();
      if (j.contains("log_prob")) r.log_prob = j.at("log_prob").get<double>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad candidate record: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<GeneratedReport> cmd_generate(const std::filesystem::path& checkpoint,
                                          const std::filesystem::path& dataset,
                                          SplitName split, std::size_t beam_k, bool greedy,
                                          const std::filesystem::path& out) {
  const LoadedModel m = load_model(checkpoint);
  const DatasetSplit data = read_existing_dataset(dataset);
  RunConfig config = m.checkpoint.config;
  config.beam_k = beam_k;
  config.validate();
  auto reports = generate_reports(m.checkpoint.params, m.vocab, m.keyword_vocab,
                                  data.part(split), config, greedy);
  write_candidates(reports, out);
  return reports;
}

MetricReport cmd_evaluate(const std::filesystem::path& candidates,
                          const std::filesystem::path& dataset, SplitName split,
                          bool bleu_smoothing) {
  const auto cands = read_candidates(candidates);
  const DatasetSplit data = read_existing_dataset(dataset);
  return score_reports(cands, data.part(split), bleu_smoothing);
}

std::vector<AblationRow> run_ablation(const DatasetSplit& data, const RunConfig& config,
                                      const std::function<void(const AblationRow&)>& on_row) {
  std::vector<AblationRow> rows;
  for (const FusionStrategy f : {FusionStrategy::kNone, FusionStrategy::kSum,
                                 FusionStrategy::kMul, FusionStrategy::kAverage,
                                 FusionStrategy::kLstmContext}) {
    RunConfig c = config;
    c.fusion = f;
    const TrainedModel m = train_model(data, c);
    const auto reports =
        generate_reports(m.params, m.vocab, m.keyword_vocab, data.test, c);
    AblationRow row{f, score_reports(reports, data.test, c.bleu_smoothing),
                    m.trace.epoch_loss.back()};
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_json(std::span<const AblationRow> rows, const RunConfig& config) {
  ordered_json j;
  j["config"] = ordered_json::parse(to_json(config));
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["fusion"] = to_string(r.fusion);
    const ordered_json metrics = metrics_json(r.metrics);
    for (const auto& [k, v] : metrics.items()) row[k] = v;
    row["final_loss"] = r.final_loss;
    j["rows"].push_back(row);
  }
  return j.dump(2);
}

std::string ablation_markdown(std::span<const AblationRow> rows) {
  std::string out =
      "| fusion | BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 | BLEU-avg | CIDEr | ROUGE |\n"
      "|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    std::snprintf(buf, sizeof buf, "| %s | %.3f | %.3f | %.3f | %.3f | %.3f | %.3f | %.3f |\n",
                  std::string(to_string(r.fusion)).c_str(), m.bleu_1, m.bleu_2, m.bleu_3,
                  m.bleu_4, m.bleu_avg, m.cider, m.rouge);
    out += buf;
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config,
                                    const std::function<void(const AblationRow&)>& on_row) {
  const DatasetSplit data = read_existing_dataset(config.dataset);
  auto rows = run_ablation(data, config, on_row);
  std::filesystem::create_directories(config.output_dir);
  {
    std::ofstream f(config.output_dir / "ablation.json", std::ios::binary);
    if (!f) throw FileError("cannot write " + (config.output_dir / "ablation.json").string());
    f << ablation_json(rows, config) << '\n';
  }
  {
    std::ofstream f(config.output_dir / "ablation.md", std::ios::binary);
    if (!f) throw FileError("cannot write " + (config.output_dir / "ablation.md").string());
    f << ablation_markdown(rows);
  }
  return rows;
}

}  // namespace medrep
