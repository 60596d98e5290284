#include "medrep/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "medrep/errors.hpp"

namespace medrep {

namespace {

using nlohmann::ordered_json;

constexpr std::string_view kMagic = "MEDREP-CKPT";

void put_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

ordered_json arch_json(const Architecture& a) {
  ordered_json j;
  j["feature_size"] = a.feature_size;
  j["embedding_size"] = a.embedding_size;
  j["hidden_size"] = a.hidden_size;
  j["vocab_size"] = a.vocab_size;
  j["keyword_vocab_size"] = a.keyword_vocab_size;
  j["fusion"] = to_string(a.fusion);
  j["decoder_mode"] = to_string(a.mode);
  return j;
}

Architecture arch_from(const ordered_json& j) {
  Architecture a;
  a.feature_size = j.at("feature_size").get<std::size_t>();
  a.embedding_size = j.at("embedding_size").get<std::size_t>();
  a.hidden_size = j.at("hidden_size").get<std::size_t>();
  a.vocab_size = j.at("vocab_size").get<std::size_t>();
  a.keyword_vocab_size = j.at("keyword_vocab_size").get<std::size_t>();
  a.fusion = parse_fusion(j.at("fusion").get<std::string>());
  a.mode = parse_decoder_mode(j.at("decoder_mode").get<std::string>());
  return a;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.params.validate();
  ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["endianness"] = "little";
  header["gate_order"] = "input,forget,cell,output";
  header["architecture"] = arch_json(ckpt.params.arch);
  header["config"] = ordered_json::parse(to_json(ckpt.config));
  header["vocab"] = {{"report", {{"file", ckpt.vocab.file}, {"size", ckpt.vocab.size}}},
                     {"keyword",
                      {{"file", ckpt.keyword_vocab.file}, {"size", ckpt.keyword_vocab.size}}}};
  ordered_json table = ordered_json::array();
  std::string payload;
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.params.named_tensors()) {
    table.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    for (const double v : t->values()) put_le(payload, v);
    offset += t->size();
  }
  header["tensors"] = table;
  header["total_values"] = offset;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << header.dump() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw FileError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read checkpoint " + path.string());
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kMagic) {
    throw ParseError("not a medrep checkpoint (bad magic)", 1);
  }
  if (!std::getline(in, header_line)) throw ParseError("missing checkpoint header", 2);
  const std::string payload{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  Checkpoint ckpt;
  ordered_json header;
  std::vector<std::pair<std::string, std::pair<Shape, std::size_t>>> table;
  try {
    header = ordered_json::parse(header_line);
    if (header.at("format_version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + header.at("format_version").dump(), 2);
    }
    if (header.at("endianness").get<std::string>() != "little") {
      throw ParseError("unsupported endianness", 2);
    }
    ckpt.params = ModelParams::zeros(arch_from(header.at("architecture")));
    ckpt.config = config_from_json(header.at("config").dump());
    const auto& vocab = header.at("vocab");
    ckpt.vocab = {vocab.at("report").at("file").get<std::string>(),
                  vocab.at("report").at("size").get<std::size_t>()};
    ckpt.keyword_vocab = {vocab.at("keyword").at("file").get<std::string>(),
                          vocab.at("keyword").at("size").get<std::size_t>()};
    for (const auto& entry : header.at("tensors")) {
      table.push_back({entry.at("name").get<std::string>(),
                       {entry.at("shape").get<Shape>(), entry.at("offset").get<std::size_t>()}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint header: ") + e.what(), 2);
  } catch (const UsageError& e) {
    throw ParseError(e.what(), 2);
  } catch (const ContractError& e) {
    throw ParseError(e.what(), 2);
  }

  auto named = ckpt.params.named_tensors();
  if (table.size() != named.size()) {
    throw ShapeError("checkpoint lists " + std::to_string(table.size()) +
                     " tensors, architecture needs " + std::to_string(named.size()));
  }
  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, entry] = table[i];
    const auto& [shape, offset] = entry;
    Tensor& t = *named[i].second;
    if (name != named[i].first) {
      throw ShapeError("checkpoint tensor " + std::to_string(i) + " is '" + name +
                       "', expected '" + named[i].first + "'");
    }
    if (shape != t.shape()) {
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + to_string(shape) +
                       ", architecture needs " + to_string(t.shape()));
    }
    if (offset != expected_offset) {
      throw ShapeError("checkpoint tensor '" + name + "' has a bad offset");
    }
    expected_offset += t.size();
  }
  if (payload.size() != expected_offset * 8) {
    throw ShapeError("checkpoint payload holds " + std::to_string(payload.size()) +
                     " bytes, expected " + std::to_string(expected_offset * 8));
  }
  const char* p = payload.data();
  for (auto& [name, t] : named) {
    for (double& v : t->values()) {
      v = get_le(p);
      p += 8;
    }
  }
  return ckpt;
}

}  // namespace medrep
