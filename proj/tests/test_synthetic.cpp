#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <fstream>
#include <set>

#include "medrep/errors.hpp"
#include "medrep/synthetic.hpp"
#include "support.hpp"

using namespace medrep;

namespace {

SyntheticSpec small_spec(std::uint64_t seed = 3) {
  SyntheticSpec s;
  s.num_samples = 100;
  s.seed = seed;
  return s;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("generate") {
  SUBCASE("same seed gives identical datasets and files") {
    test::TempDir dir("synth");
    const auto a = generate(small_spec()), b = generate(small_spec());
    CHECK(a == b);
    write_dataset(a, dir / "a.jsonl");
    write_dataset(b, dir / "b.jsonl");
    CHECK(test::read_bytes(dir / "a.jsonl") == test::read_bytes(dir / "b.jsonl"));
  }
  SUBCASE("100 samples split 60/20/20") {
    const auto d = generate(small_spec());
    CHECK(d.train.size() == 60);
    CHECK(d.val.size() == 20);
    CHECK(d.test.size() == 20);
  }
  SUBCASE("full coverage: keywords are report tokens") {
    const auto d = generate(small_spec());
    for (const auto* part : {&d.train, &d.val, &d.test}) {
      for (const auto& s : *part) {
        const auto report = normalize(s.report);
        const std::set<std::string> vocab(report.begin(), report.end());
        for (const auto& k : s.keywords) {
          for (const auto& t : normalize(k)) CHECK(vocab.count(t) == 1);
        }
        CHECK(s.keywords.size() >= 5);
        CHECK(s.keywords.size() <= 10);
        CHECK(report.size() >= 5);
        CHECK(report.size() <= 15);
        // The four attribute slots are all exposed as keywords.
        for (const auto* w : {"acute", "chronic", "mild", "severe", "macular", "peripheral",
                              "unilateral", "bilateral"}) {
          if (vocab.count(w)) CHECK(std::find(s.keywords.begin(), s.keywords.end(), w) != s.keywords.end());
        }
      }
    }
  }
  SUBCASE("zero noise gives exact scaled one-hot features") {
    auto spec = small_spec();
    spec.noise_std = 0.0;
    spec.feature_scale = 2.5;
    for (const auto& s : generate(spec).train) {
      std::size_t nonzero = 0;
      for (const double v : s.features) {
        CHECK((v == 0.0 || v == 2.5));
        nonzero += v != 0.0;
      }
      CHECK(nonzero == 1);
    }
  }
  SUBCASE("distinct seeds differ") {
    const auto a = generate(small_spec(1));
    for (std::uint64_t seed = 2; seed < 12; ++seed) CHECK_FALSE(a == generate(small_spec(seed)));
  }
  SUBCASE("zero coverage exposes no filling tokens") {
    auto spec = small_spec();
    spec.keyword_coverage = 0.0;
    for (const auto& s : generate(spec).train) {
      for (const auto& k : s.keywords) {
        for (const auto* w : {"acute", "chronic", "mild", "severe", "macular", "peripheral"}) CHECK(k != w);
      }
    }
  }
  SUBCASE("ids are unique") {
    const auto d = generate(small_spec());
    std::set<std::string> ids;
    for (const auto* part : {&d.train, &d.val, &d.test})
      for (const auto& s : *part) ids.insert(s.id);
    CHECK(ids.size() == 100);
  }
}

TEST_CASE("split arithmetic and disjointness for every size") {
  for (std::size_t n = 5; n <= 60; ++n) {
    const auto s = split_sizes(n);
    CHECK(s.val == n / 5);
    CHECK(s.test == n / 5);
    CHECK(s.train + s.val + s.test == n);
  }
  auto spec = small_spec();
  spec.num_samples = 37;
  const auto d = generate(spec);
  std::set<std::string> ids;
  for (const auto* part : {&d.train, &d.val, &d.test})
    for (const auto& s : *part) CHECK(ids.insert(s.id).second);
  CHECK(d.size() == 37);
}

TEST_CASE("invalid specs") {
  const auto bad = [](auto mutate) {
    SyntheticSpec s;
    mutate(s);
    return s;
  };
  CHECK_THROWS_AS(generate(bad([](SyntheticSpec& s) { s.num_diseases = 13; })), ContractError);
  CHECK_THROWS_AS(generate(bad([](SyntheticSpec& s) { s.feature_dim = 4; })), ContractError);
  CHECK_THROWS_AS(generate(bad([](SyntheticSpec& s) { s.noise_std = -1; })), ContractError);
  CHECK_THROWS_AS(generate(bad([](SyntheticSpec& s) { s.keyword_coverage = 1.5; })), ContractError);
  CHECK_THROWS_AS(generate(bad([](SyntheticSpec& s) { s.keywords_min = 11; })), ContractError);
  CHECK(disease_template_count() == 12);
  CHECK_THROWS_AS(parse_split("dev"), UsageError);
}

TEST_CASE("dataset file round trip") {
  test::TempDir dir("dataset");
  auto spec = small_spec();
  spec.noise_std = 0.37;  // non-trivial doubles
  const auto d = generate(spec);
  write_dataset(d, dir / "d.jsonl");
  const auto back = read_dataset(dir / "d.jsonl");
  CHECK(back == d);
  write_dataset(back, dir / "again.jsonl");
  CHECK(test::read_bytes(dir / "d.jsonl") == test::read_bytes(dir / "again.jsonl"));
  CHECK(manifest_json(d).find("\"counts\"") != std::string::npos);
}

TEST_CASE("malformed dataset files") {
  test::TempDir dir("badfile");
  const std::string manifest = manifest_json(generate(small_spec())) + "\n";
  const std::string good =
      R"({"id":"s1","split":"train","features":[0.5,1],"keywords":["mild"],"report":"mild edema"})";

  SUBCASE("missing report names its line") {
    write_text(dir / "f.jsonl",
               manifest + good + "\n" + R"({"id":"s2","split":"train","features":[1],"keywords":[]})" + "\n");
    try {
      read_dataset(dir / "f.jsonl");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("truncated final line") {
    write_text(dir / "f.jsonl", manifest + good + "\n" + good.substr(0, 30));
    try {
      read_dataset(dir / "f.jsonl");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_dataset(dir / "nope.jsonl"), FileError);
  }
}
