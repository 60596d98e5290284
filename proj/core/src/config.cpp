#include "medrep/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "medrep/errors.hpp"

namespace medrep {

namespace {

using nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key) +
                   " (expected true or false)");
}

}  // namespace

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.lr = lr;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.dropout = dropout;
  o.optimizer = optimizer;
  o.seed = seed;
  return o;
}

void RunConfig::validate() const {
  if (embedding_size == 0 || hidden_size == 0) throw UsageError("embedding and hidden sizes must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("lr must be finite and >= 0");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (max_len < 3) throw UsageError("max_len must be >= 3");
  if (beam_k == 0) throw UsageError("beam_k must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "embedding_size" || key == "E") {
    c.embedding_size = parse_number<std::size_t>(key, value);
  } else if (key == "hidden_size" || key == "H") {
    c.hidden_size = parse_number<std::size_t>(key, value);
  } else if (key == "lr") {
    c.lr = parse_number<double>(key, value);
  } else if (key == "epochs") {
    c.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "batch_size" || key == "batch") {
    c.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "max_len") {
    c.max_len = parse_number<std::size_t>(key, value);
  } else if (key == "beam_k") {
    c.beam_k = parse_number<std::size_t>(key, value);
  } else if (key == "dropout") {
    c.dropout = parse_number<double>(key, value);
  } else if (key == "fusion") {
    c.fusion = parse_fusion(value);
  } else if (key == "decoder_mode") {
    c.decoder_mode = parse_decoder_mode(value);
  } else if (key == "optimizer") {
    c.optimizer = parse_optimizer(value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "length_normalize") {
    c.length_normalize = parse_bool(key, value);
  } else if (key == "bleu_smoothing") {
    c.bleu_smoothing = parse_bool(key, value);
  } else if (key == "dataset") {
    c.dataset = std::string(value);
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  } else {
    throw UsageError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError("expected key = value", line_no);
    try {
      apply_setting(config, key, value);
    } catch (const UsageError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

void apply_environment(RunConfig& config) {
  if (const char* v = std::getenv("MEDREP_DATASET"); v && *v) config.dataset = v;
  if (const char* v = std::getenv("MEDREP_OUTPUT_DIR"); v && *v) config.output_dir = v;
}

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["embedding_size"] = c.embedding_size;
  j["hidden_size"] = c.hidden_size;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["max_len"] = c.max_len;
  j["beam_k"] = c.beam_k;
  j["dropout"] = c.dropout;
  j["fusion"] = to_string(c.fusion);
  j["decoder_mode"] = to_string(c.decoder_mode);
  j["optimizer"] = to_string(c.optimizer);
  j["seed"] = c.seed;
  j["length_normalize"] = c.length_normalize;
  j["bleu_smoothing"] = c.bleu_smoothing;
  j["dataset"] = c.dataset.generic_string();
  j["output_dir"] = c.output_dir.generic_string();
  return j.dump();
}

RunConfig config_from_json(std::string_view text) {
  try {
    const auto j = ordered_json::parse(text);
    RunConfig c;
    c.embedding_size = j.at("embedding_size").get<std::size_t>();
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.beam_k = j.at("beam_k").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.fusion = parse_fusion(j.at("fusion").get<std::string>());
    c.decoder_mode = parse_decoder_mode(j.at("decoder_mode").get<std::string>());
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.length_normalize = j.at("length_normalize").get<bool>();
    c.bleu_smoothing = j.at("bleu_smoothing").get<bool>();
    c.dataset = j.at("dataset").get<std::string>();
    c.output_dir = j.at("output_dir").get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad config JSON: ") + e.what(), 1);
  } catch (const UsageError& e) {
    throw ParseError(e.what(), 1);
  }
}

}  // namespace medrep
