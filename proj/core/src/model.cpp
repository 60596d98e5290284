#include "medrep/model.hpp"

#include "medrep/errors.hpp"
#include "medrep/rng.hpp"

namespace medrep {

std::string_view to_string(FusionStrategy fusion) {
  switch (fusion) {
    case FusionStrategy::kLstmContext: return "lstm-context";
    case FusionStrategy::kAverage: return "average";
    case FusionStrategy::kSum: return "sum";
    case FusionStrategy::kMul: return "mul";
    case FusionStrategy::kNone: return "none";
  }
  return "?";
}

std::string_view to_string(DecoderMode mode) {
  return mode == DecoderMode::kCausal ? "causal" : "bi-prefix";
}

FusionStrategy parse_fusion(std::string_view text) {
  for (const auto f : {FusionStrategy::kLstmContext, FusionStrategy::kAverage,
                       FusionStrategy::kSum, FusionStrategy::kMul,
                       FusionStrategy::kNone}) {
    if (text == to_string(f)) return f;
  }
  throw UsageError("unknown fusion strategy '" + std::string(text) +
                   "' (expected lstm-context, average, sum, mul or none)");
}

DecoderMode parse_decoder_mode(std::string_view text) {
  if (text == "causal") return DecoderMode::kCausal;
  if (text == "bi-prefix") return DecoderMode::kBiPrefix;
  throw UsageError("unknown decoder mode '" + std::string(text) +
                   "' (expected causal or bi-prefix)");
}

std::size_t Architecture::context_size() const {
  switch (fusion) {
    case FusionStrategy::kLstmContext: return hidden_size;
    case FusionStrategy::kNone: return 0;
    default: return embedding_size;
  }
}

namespace {

void require_positive(const Architecture& a) {
  if (a.feature_size == 0 || a.embedding_size == 0 || a.hidden_size == 0 ||
      a.vocab_size == 0) {
    throw ContractError("architecture needs F, E, H, V > 0");
  }
  if (a.uses_keywords() && a.keyword_vocab_size == 0) {
    throw ContractError("keyword fusion needs a non-empty keyword vocabulary");
  }
}

void check_shape(const Tensor& t, const Shape& expected, const std::string& name) {
  if (t.shape() != expected) {
    throw ShapeError(name + " has shape " + to_string(t.shape()) + ", expected " +
                     to_string(expected));
  }
}

}  // namespace

ModelParams ModelParams::initialize(const Architecture& arch, std::uint64_t seed) {
  require_positive(arch);
  const std::size_t E = arch.embedding_size, H = arch.hidden_size;
  const auto stream = [seed](std::string_view name) {
    return Rng::stream(seed, name);
  };
  ModelParams p;
  p.arch = arch;
  {
    auto rng = stream("W_d");
    p.encoder.image_projection = glorot_uniform(E, arch.feature_size, rng);
  }
  if (arch.uses_keywords()) {
    auto rng = stream("W_k");
    p.encoder.keyword_embedding = glorot_uniform(E, arch.keyword_vocab_size, rng);
  }
  if (arch.fusion == FusionStrategy::kLstmContext) {
    auto rng = stream("encoder");
    p.encoder.cell = LstmCellParams::glorot(E, H, rng);
  }
  {
    auto rng = stream("W_e");
    p.decoder.word_embedding = glorot_uniform(E, arch.vocab_size, rng);
  }
  {
    auto rng = stream("decoder");
    p.decoder.cell = LstmCellParams::glorot(arch.decoder_input_size(), H, rng);
  }
  if (arch.mode == DecoderMode::kBiPrefix) {
    auto rng = stream("decoder_backward");
    p.decoder.backward_cell =
        LstmCellParams::glorot(arch.decoder_input_size(), H, rng);
  }
  {
    auto rng = stream("output");
    p.decoder.output_weights =
        glorot_uniform(arch.vocab_size, arch.projection_input_size(), rng);
    p.decoder.output_bias = Tensor::zeros({arch.vocab_size});
  }
  return p;
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  require_positive(arch);
  const std::size_t E = arch.embedding_size, H = arch.hidden_size;
  ModelParams p;
  p.arch = arch;
  p.encoder.image_projection = Tensor::zeros({E, arch.feature_size});
  if (arch.uses_keywords()) {
    p.encoder.keyword_embedding = Tensor::zeros({E, arch.keyword_vocab_size});
  }
  if (arch.fusion == FusionStrategy::kLstmContext) {
    p.encoder.cell = LstmCellParams::zeros(E, H);
  }
  p.decoder.word_embedding = Tensor::zeros({E, arch.vocab_size});
  p.decoder.cell = LstmCellParams::zeros(arch.decoder_input_size(), H);
  if (arch.mode == DecoderMode::kBiPrefix) {
    p.decoder.backward_cell = LstmCellParams::zeros(arch.decoder_input_size(), H);
  }
  p.decoder.output_weights =
      Tensor::zeros({arch.vocab_size, arch.projection_input_size()});
  p.decoder.output_bias = Tensor::zeros({arch.vocab_size});
  return p;
}

std::vector<NamedTensor> ModelParams::named_tensors() {
  std::vector<NamedTensor> out;
  const auto add_cell = [&out](const std::string& prefix, LstmCellParams& cell) {
    out.emplace_back(prefix + ".input_weights", &cell.input_weights);
    out.emplace_back(prefix + ".hidden_weights", &cell.hidden_weights);
    out.emplace_back(prefix + ".bias", &cell.bias);
  };
  out.emplace_back("W_d", &encoder.image_projection);
  if (encoder.keyword_embedding) out.emplace_back("W_k", &*encoder.keyword_embedding);
  if (encoder.cell) add_cell("encoder", *encoder.cell);
  out.emplace_back("W_e", &decoder.word_embedding);
  add_cell("decoder", decoder.cell);
  if (decoder.backward_cell) add_cell("decoder_backward", *decoder.backward_cell);
  out.emplace_back("output.weights", &decoder.output_weights);
  out.emplace_back("output.bias", &decoder.output_bias);
  return out;
}

std::vector<ConstNamedTensor> ModelParams::named_tensors() const {
  std::vector<ConstNamedTensor> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named_tensors()) {
    out.emplace_back(name, t);
  }
  return out;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_tensors()) out.push_back(t);
  return out;
}

void ModelParams::track() {
  for (Tensor* t : tensors()) t->track();
}

void ModelParams::zero_grad() {
  for (Tensor* t : tensors()) t->zero_grad();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_tensors()) n += t->size();
  return n;
}

void ModelParams::validate() const {
  const std::size_t E = arch.embedding_size, H = arch.hidden_size;
  const std::size_t D = arch.decoder_input_size();
  const auto check_cell = [](const LstmCellParams& c, std::size_t in,
                             std::size_t hidden, const std::string& name) {
    check_shape(c.input_weights, {4 * hidden, in}, name + ".input_weights");
    check_shape(c.hidden_weights, {4 * hidden, hidden}, name + ".hidden_weights");
    check_shape(c.bias, {4 * hidden}, name + ".bias");
  };
  check_shape(encoder.image_projection, {E, arch.feature_size}, "W_d");
  if (arch.uses_keywords() != encoder.keyword_embedding.has_value()) {
    throw ShapeError("W_k presence does not match fusion strategy");
  }
  if (encoder.keyword_embedding) {
    check_shape(*encoder.keyword_embedding, {E, arch.keyword_vocab_size}, "W_k");
  }
  if ((arch.fusion == FusionStrategy::kLstmContext) != encoder.cell.has_value()) {
    throw ShapeError("encoder cell presence does not match fusion strategy");
  }
  if (encoder.cell) check_cell(*encoder.cell, E, H, "encoder");
  check_shape(decoder.word_embedding, {E, arch.vocab_size}, "W_e");
  check_cell(decoder.cell, D, H, "decoder");
  if ((arch.mode == DecoderMode::kBiPrefix) != decoder.backward_cell.has_value()) {
    throw ShapeError("backward cell presence does not match decoder mode");
  }
  if (decoder.backward_cell) check_cell(*decoder.backward_cell, D, H, "decoder_backward");
  check_shape(decoder.output_weights,
              {arch.vocab_size, arch.projection_input_size()}, "output.weights");
  check_shape(decoder.output_bias, {arch.vocab_size}, "output.bias");
}

}  // namespace medrep
