#include "medrep/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "medrep/errors.hpp"
#include "medrep/rng.hpp"

namespace medrep {

namespace {

using nlohmann::json;

const std::vector<TokenList>& diseases() {
  static const std::vector<TokenList> kDiseases = {
      {"diabetic", "retinopathy"},
      {"macular", "degeneration"},
      {"central", "serous", "chorioretinopathy"},
      {"retinal", "vein", "occlusion"},
      {"neuroretinitis"},
      {"x", "linked", "retinoschisis"},
      {"retinitis", "pigmentosa"},
      {"choroidal", "neovascularization"},
      {"vitelliform", "dystrophy"},
      {"uveitis"},
      {"coats", "disease"},
      {"optic", "disc", "edema"},
  };
  return kDiseases;
}

constexpr std::array<std::string_view, 2> kOnset = {"acute", "chronic"};
constexpr std::array<std::string_view, 2> kSeverity = {"mild", "severe"};
constexpr std::array<std::string_view, 2> kLocation = {"macular", "peripheral"};
constexpr std::array<std::string_view, 2> kLaterality = {"unilateral", "bilateral"};
// Template words that carry no sample-specific information.
constexpr std::array<std::string_view, 5> kConnectors = {"with", "changes", "in",
                                                         "the", "region"};

constexpr const char* kPrng =
    "mt19937_64; uniform = top 53 bits * 2^-53; below(n) = masked rejection; "
    "normal = Box-Muller (cos then sin)";

json spec_to_json(const SyntheticSpec& s) {
  return {{"num_samples", s.num_samples},   {"num_diseases", s.num_diseases},
          {"feature_dim", s.feature_dim},   {"noise_std", s.noise_std},
          {"keyword_coverage", s.keyword_coverage},
          {"keywords_min", s.keywords_min}, {"keywords_max", s.keywords_max},
          {"feature_scale", s.feature_scale}, {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec s;
  s.num_samples = j.at("num_samples").get<std::size_t>();
  s.num_diseases = j.at("num_diseases").get<std::size_t>();
  s.feature_dim = j.at("feature_dim").get<std::size_t>();
  s.noise_std = j.at("noise_std").get<double>();
  s.keyword_coverage = j.at("keyword_coverage").get<double>();
  s.keywords_min = j.at("keywords_min").get<std::size_t>();
  s.keywords_max = j.at("keywords_max").get<std::size_t>();
  s.feature_scale = j.at("feature_scale").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", index);
  return buf;
}

Sample draw_sample(const SyntheticSpec& spec, Rng& rng, std::size_t index) {
  const std::size_t d = rng.below(spec.num_diseases);
  const TokenList& disease = diseases()[d];
  const std::string onset(kOnset[rng.below(2)]);
  const std::string severity(kSeverity[rng.below(2)]);
  const std::string location(kLocation[rng.below(2)]);
  const std::string laterality(kLaterality[rng.below(2)]);
  const auto target = static_cast<std::size_t>(
      rng.range(static_cast<std::int64_t>(spec.keywords_min),
                static_cast<std::int64_t>(spec.keywords_max)));

  TokenList report{onset};
  report.insert(report.end(), disease.begin(), disease.end());
  for (const auto& w : {std::string("with"), severity, std::string("changes"),
                        std::string("in"), std::string("the"), location,
                        std::string("region"), laterality}) {
    report.push_back(w);
  }

  // Filling tokens: what the template's slots were filled with.
  TokenList filling = disease;
  filling.insert(filling.end(), {onset, severity, location, laterality});
  std::vector<std::size_t> pick(filling.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  rng.shuffle(std::span<std::size_t>(pick));
  const auto keep = static_cast<std::size_t>(
      std::llround(spec.keyword_coverage * static_cast<double>(filling.size())));
  pick.resize(std::min(keep, pick.size()));
  std::sort(pick.begin(), pick.end());

  Sample s;
  s.id = sample_id(index);
  const std::size_t padding = target > pick.size() ? target - pick.size() : 0;
  for (std::size_t i = 0; i < padding; ++i) {
    s.keywords.emplace_back(kConnectors[i % kConnectors.size()]);
  }
  for (const std::size_t i : pick) s.keywords.push_back(filling[i]);
  s.report = join(report);

  s.features.assign(spec.feature_dim, 0.0);
  s.features[d] = spec.feature_scale;
  for (double& f : s.features) f += spec.noise_std * rng.normal();
  return s;
}

[[noreturn]] void parse_fail(const std::string& message, std::size_t line) {
  throw ParseError(message, line);
}

}  // namespace

std::size_t disease_template_count() { return diseases().size(); }

void SyntheticSpec::validate() const {
  const auto fail = [](const std::string& m) { throw ContractError("synthetic spec: " + m); };
  if (num_samples == 0) fail("num_samples must be positive");
  if (num_diseases == 0 || num_diseases > disease_template_count()) {
    fail("num_diseases must be in [1, " + std::to_string(disease_template_count()) + "]");
  }
  if (feature_dim < num_diseases) fail("feature_dim must be >= num_diseases");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail("noise_std must be finite and >= 0");
  if (!(keyword_coverage >= 0.0 && keyword_coverage <= 1.0)) {
    fail("keyword_coverage must be in [0, 1]");
  }
  if (keywords_min > keywords_max) fail("keywords_min must be <= keywords_max");
  if (!std::isfinite(feature_scale)) fail("feature_scale must be finite");
}

std::string_view to_string(SplitName split) {
  switch (split) {
    case SplitName::kTrain: return "train";
    case SplitName::kVal: return "val";
    case SplitName::kTest: return "test";
  }
  return "?";
}

SplitName parse_split(std::string_view text) {
  if (text == "train") return SplitName::kTrain;
  if (text == "val") return SplitName::kVal;
  if (text == "test") return SplitName::kTest;
  throw UsageError("unknown split '" + std::string(text) + "' (expected train, val or test)");
}

const std::vector<Sample>& DatasetSplit::part(SplitName split) const {
  switch (split) {
    case SplitName::kTrain: return train;
    case SplitName::kVal: return val;
    case SplitName::kTest: return test;
  }
  return train;
}

SplitSizes split_sizes(std::size_t num_samples) {
  const std::size_t val = num_samples / 5;
  const std::size_t test = num_samples / 5;
  return {num_samples - val - test, val, test};
}

DatasetSplit generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const SplitSizes sizes = split_sizes(spec.num_samples);
  DatasetSplit data;
  data.spec = spec;
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    Sample s = draw_sample(spec, rng, i);
    if (i < sizes.train) {
      data.train.push_back(std::move(s));
    } else if (i < sizes.train + sizes.val) {
      data.val.push_back(std::move(s));
    } else {
      data.test.push_back(std::move(s));
    }
  }
  return data;
}

std::string manifest_json(const DatasetSplit& data) {
  json m = {{"format", "medrep-dataset"},
            {"version", 1},
            {"counts", {{"train", data.train.size()},
                        {"val", data.val.size()},
                        {"test", data.test.size()}}}};
  if (data.spec) {
    m["spec"] = spec_to_json(*data.spec);
    m["prng"] = kPrng;
  }
  return json{{"manifest", m}}.dump();
}

void write_dataset(const DatasetSplit& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write dataset " + path.string());
  out << manifest_json(data) << '\n';
  for (const SplitName split : {SplitName::kTrain, SplitName::kVal, SplitName::kTest}) {
    for (const Sample& s : data.part(split)) {
      const json record = {{"id", s.id},
                           {"split", to_string(split)},
                           {"features", s.features},
                           {"keywords", s.keywords},
                           {"report", s.report}};
      out << record.dump() << '\n';
    }
  }
  if (!out) throw FileError("failed writing dataset " + path.string());
}

DatasetSplit read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read dataset " + path.string());
  DatasetSplit data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(std::string("malformed JSON (") + e.what() + ")", line_no);
    }
    if (!j.is_object()) parse_fail("record is not a JSON object", line_no);
    if (line_no == 1 && j.contains("manifest")) {
      try {
        const json& m = j.at("manifest");
        if (m.contains("spec")) data.spec = spec_from_json(m.at("spec"));
      } catch (const json::exception& e) {
        parse_fail(std::string("bad manifest (") + e.what() + ")", line_no);
      }
      continue;
    }
    for (const char* key : {"id", "split", "features", "keywords", "report"}) {
      if (!j.contains(key)) parse_fail(std::string("missing \"") + key + "\" field", line_no);
    }
    Sample s;
    SplitName split;
    try {
      s.id = j.at("id").get<std::string>();
      split = parse_split(j.at("split").get<std::string>());
      s.features = j.at("features").get<std::vector<double>>();
      s.keywords = j.at("keywords").get<TokenList>();
      s.report = j.at("report").get<std::string>();
    } catch (const json::exception& e) {
      parse_fail(std::string("bad field type (") + e.what() + ")", line_no);
    } catch (const UsageError& e) {
      parse_fail(e.what(), line_no);
    }
    if (s.report.empty()) parse_fail("empty report", line_no);
    switch (split) {
      case SplitName::kTrain: data.train.push_back(std::move(s)); break;
      case SplitName::kVal: data.val.push_back(std::move(s)); break;
      case SplitName::kTest: data.test.push_back(std::move(s)); break;
    }
  }
  if (in.bad()) throw FileError("failed reading dataset " + path.string());
  return data;
}

}  // namespace medrep
