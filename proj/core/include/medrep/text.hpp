#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace medrep {

using TokenId = std::int32_t;
using TokenList = std::vector<std::string>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kStart = 1;
inline constexpr TokenId kEnd = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kFirstWordId = 4;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kStartToken = "<start>";
inline constexpr std::string_view kEndToken = "<end>";
inline constexpr std::string_view kUnkToken = "<unk>";

/// Lowercases ASCII letters, turns every other character into a word
/// break, and splits. "stage-2 Diffuse" -> ["stage", "diffuse"].
TokenList normalize(std::string_view text);

/// Splits on ASCII whitespace without any other rewriting.
TokenList split_whitespace(std::string_view text);

std::string join(std::span<const std::string> tokens);

/// Token <-> id map with the four reserved ids PAD=0, START=1, END=2, UNK=3.
class Vocabulary {
 public:
  Vocabulary();  // reserved tokens only

  /// Counts every token in `corpora`; tokens seen at least `min_count`
  /// times get ids from 4 upward ordered by (frequency desc, token asc).
  static Vocabulary build(std::span<const TokenList> corpora,
                          std::size_t min_count = 2);

  /// Report vocabulary, or the keyword-inclusive one when
  /// `include_keywords` is set (keyword lists join the counting corpus).
  static Vocabulary build(std::span<const TokenList> reports,
                          std::span<const TokenList> keywords,
                          bool include_keywords, std::size_t min_count = 2);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;  // IndexError when out of range
  std::span<const std::string> tokens() const noexcept { return tokens_; }

  std::vector<TokenId> ids(std::span<const std::string> tokens) const;

  /// Text form: the four reserved tokens on lines 1-4, then one token per
  /// line so that line (id - 4) after the header holds token id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Fixed-length id sequence: START, content ids, exactly one END, then PAD.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t end_position() const;  // index of END
  std::size_t content_length() const { return end_position() - 1; }
  std::vector<TokenId> content() const;
};

/// [START] + ids + [END], keeping at most max_len - 2 content ids, then
/// PAD to exactly max_len. Requires max_len >= 3.
TokenSequence encode(std::span<const std::string> tokens,
                     const Vocabulary& vocab, std::size_t max_len);

/// Space-joined tokens, skipping PAD/START/END; UNK renders as "<unk>".
std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab);
inline std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
  return decode(seq.ids, vocab);
}

/// Layout check: starts with START, one END at index <= max_len - 1,
/// PAD only after END, length exactly max_len.
bool well_formed(const TokenSequence& seq, std::size_t max_len);

}  // namespace medrep
