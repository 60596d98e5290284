#include <doctest.h>

#include <algorithm>

#include "medrep/errors.hpp"
#include "medrep/rng.hpp"
#include "medrep/text.hpp"
#include "support.hpp"

using namespace medrep;

TEST_CASE("normalize") {
  CHECK(normalize("Diffuse, UNILATERAL!") == TokenList{"diffuse", "unilateral"});
  CHECK(normalize("x-linked retinoschisis") == TokenList{"x", "linked", "retinoschisis"});
  CHECK(normalize("").empty());
  CHECK(normalize("stage-2 Diffuse") == TokenList{"stage", "diffuse"});
  CHECK(normalize("  123 ... ").empty());
}

TEST_CASE("build_vocab") {
  SUBCASE("singletons map to UNK") {
    const std::vector<TokenList> corpus = {{"a", "b"}, {"a", "c"}};
    const auto v = Vocabulary::build(corpus);
    CHECK(v.size() == 5);
    CHECK(v.id("a") == kFirstWordId);
    CHECK(v.id("b") == kUnk);
    CHECK(v.id("c") == kUnk);
  }
  SUBCASE("every token twice gives no UNK") {
    const std::vector<TokenList> corpus = {{"x", "y", "z"}, {"z", "y", "x"}};
    const auto v = Vocabulary::build(corpus);
    for (const auto* t : {"x", "y", "z"}) CHECK(v.id(t) != kUnk);
  }
  SUBCASE("keyword-inclusive vocabulary is larger") {
    const std::vector<TokenList> reports = {{"macular", "edema"}, {"macular", "edema"}};
    const std::vector<TokenList> keywords = {{"dusn"}, {"dusn"}};
    const auto v = Vocabulary::build(reports, keywords, false);
    const auto vk = Vocabulary::build(reports, keywords, true);
    CHECK_FALSE(v.contains("dusn"));
    CHECK(vk.contains("dusn"));
    CHECK(vk.size() > v.size());
  }
  SUBCASE("ids ordered by frequency then token") {
    const std::vector<TokenList> corpus = {{"b", "b", "b", "a", "a", "c", "c"}};
    const auto v = Vocabulary::build(corpus);
    CHECK(v.token(4) == "b");
    CHECK(v.token(5) == "a");
    CHECK(v.token(6) == "c");
  }
  SUBCASE("reserved tokens and mutual inverse") {
    const std::vector<TokenList> corpus = {{"a", "a", "b", "b"}};
    const auto v = Vocabulary::build(corpus);
    CHECK(v.token(kPad) == kPadToken);
    CHECK(v.token(kStart) == kStartToken);
    CHECK(v.token(kEnd) == kEndToken);
    CHECK(v.token(kUnk) == kUnkToken);
    for (TokenId i = 0; i < static_cast<TokenId>(v.size()); ++i) CHECK(v.id(v.token(i)) == i);
    CHECK_THROWS_AS(v.token(static_cast<TokenId>(v.size())), IndexError);
  }
}

TEST_CASE("build_vocab is insensitive to corpus order") {
  Rng rng(12);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TokenList> corpus(10);
    for (auto& line : corpus) {
      for (std::size_t i = 0, n = rng.below(6); i < n; ++i) line.push_back(words[rng.below(words.size())]);
    }
    auto shuffled = corpus;
    rng.shuffle(std::span<TokenList>(shuffled));
    CHECK(Vocabulary::build(corpus) == Vocabulary::build(shuffled));
  }
}

TEST_CASE("encode") {
  const std::vector<TokenList> corpus = {{"a", "a", "b", "b"}};
  const auto v = Vocabulary::build(corpus);
  SUBCASE("pads to max_len") {
    const auto s = encode(TokenList{"a"}, v, 5);
    CHECK(s.ids == std::vector<TokenId>{kStart, v.id("a"), kEnd, kPad, kPad});
  }
  SUBCASE("truncates to max_len - 2 content ids") {
    const TokenList sixty(60, "a");
    const auto s = encode(sixty, v, 50);
    CHECK(s.ids.size() == 50);
    CHECK(s.content_length() == 48);
    CHECK(s.end_position() == 49);
    CHECK(s.ids[49] == kEnd);
  }
  SUBCASE("unknown token becomes UNK") {
    const auto s = encode(TokenList{"a", "zzz"}, v, 6);
    CHECK(s.ids[2] == kUnk);
  }
  SUBCASE("max_len below 3 is rejected") {
    CHECK_THROWS_AS(encode(TokenList{"a"}, v, 2), ContractError);
  }
}

TEST_CASE("decode") {
  const std::vector<TokenList> corpus = {{"mild", "mild", "edema", "edema"}};
  const auto v = Vocabulary::build(corpus);
  CHECK(decode(encode(TokenList{"mild", "edema"}, v, 10), v) == "mild edema");
  CHECK(decode(std::vector<TokenId>{kStart, kEnd}, v) == "");
  CHECK(decode(std::vector<TokenId>{kStart, kUnk, v.id("edema"), kEnd}, v) == "<unk> edema");
  CHECK_THROWS_AS(decode(std::vector<TokenId>{kStart, 99, kEnd}, v), IndexError);
}

TEST_CASE("encode/decode round trip and layout property") {
  Rng rng(77);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
  std::vector<TokenList> corpus = {words, words};
  const auto v = Vocabulary::build(corpus);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t max_len = 3 + rng.below(20);
    TokenList t;
    for (std::size_t i = 0, n = rng.below(30); i < n; ++i) {
      t.push_back(rng.below(5) == 0 ? "oov" : words[rng.below(words.size())]);
    }
    const auto s = encode(t, v, max_len);
    CHECK(well_formed(s, max_len));
    if (t.size() <= max_len - 2 && std::find(t.begin(), t.end(), "oov") == t.end()) {
      CHECK(decode(s, v) == join(t));
    }
  }
}

TEST_CASE("well_formed rejects broken layouts") {
  CHECK(well_formed(TokenSequence{{kStart, kEnd, kPad}}, 3));
  CHECK_FALSE(well_formed(TokenSequence{{kStart, kEnd}}, 3));
  CHECK_FALSE(well_formed(TokenSequence{{4, kEnd, kPad}}, 3));
  CHECK_FALSE(well_formed(TokenSequence{{kStart, kPad, kEnd}}, 3));
  CHECK_FALSE(well_formed(TokenSequence{{kStart, kEnd, kEnd}}, 3));
  CHECK_FALSE(well_formed(TokenSequence{{kStart, 4, 5}}, 3));
}

TEST_CASE("vocabulary file round trip") {
  test::TempDir dir("vocab");
  const std::vector<TokenList> corpus = {{"a", "b", "c"}, {"c", "b", "a"}};
  const auto v = Vocabulary::build(corpus);
  v.save(dir / "v.txt");
  CHECK(Vocabulary::load(dir / "v.txt") == v);
  const auto text = test::read_bytes(dir / "v.txt");
  CHECK(text.rfind("<pad>\n<start>\n<end>\n<unk>\n", 0) == 0);
  CHECK_THROWS_AS(Vocabulary::load(dir / "missing.txt"), FileError);
}
