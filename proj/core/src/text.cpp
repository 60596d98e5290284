#include "medrep/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "medrep/errors.hpp"

namespace medrep {

namespace {

bool is_ascii_alpha(char ch) {
  return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
}

bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' ||
         ch == '\v';
}

}  // namespace

TokenList normalize(std::string_view text) {
  TokenList out;
  std::string current;
  for (const char ch : text) {
    if (is_ascii_alpha(ch)) {
      current.push_back(static_cast<char>(ch | 0x20));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

TokenList split_whitespace(std::string_view text) {
  TokenList out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto t : {kPadToken, kStartToken, kEndToken, kUnkToken}) {
    add(std::string(t));
  }
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const TokenList> corpora,
                             std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& list : corpora) {
    for (const auto& token : list) ++counts[token];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  // std::map iteration is already token-ascending; stable sort keeps that
  // order among equal counts.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  Vocabulary vocab;
  for (auto& [token, count] : kept) {
    if (vocab.contains(token)) continue;  // a literal reserved string
    vocab.add(token);
  }
  return vocab;
}

Vocabulary Vocabulary::build(std::span<const TokenList> reports,
                             std::span<const TokenList> keywords,
                             bool include_keywords, std::size_t min_count) {
  if (!include_keywords) return build(reports, min_count);
  std::vector<TokenList> corpus(reports.begin(), reports.end());
  corpus.insert(corpus.end(), keywords.begin(), keywords.end());
  return build(corpus, min_count);
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) +
                     " outside vocabulary of " + std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::ids(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw FileError("failed writing vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no <= 4) {
      if (line != vocab.tokens_[line_no - 1]) {
        throw ParseError("expected reserved token " + vocab.tokens_[line_no - 1] +
                             ", got '" + line + "'",
                         line_no);
      }
      continue;
    }
    if (line.empty() || split_whitespace(line).size() != 1 ||
        split_whitespace(line).front() != line) {
      throw ParseError("malformed vocabulary token '" + line + "'", line_no);
    }
    if (vocab.contains(line)) {
      throw ParseError("duplicate vocabulary token '" + line + "'", line_no);
    }
    vocab.add(line);
  }
  if (line_no < 4) throw ParseError("missing reserved-token header", line_no);
  return vocab;
}

std::size_t TokenSequence::end_position() const {
  const auto it = std::find(ids.begin(), ids.end(), kEnd);
  if (it == ids.end()) throw ContractError("token sequence has no END");
  return static_cast<std::size_t>(it - ids.begin());
}

std::vector<TokenId> TokenSequence::content() const {
  return {ids.begin() + 1,
          ids.begin() + static_cast<std::ptrdiff_t>(end_position())};
}

TokenSequence encode(std::span<const std::string> tokens,
                     const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 3) {
    throw ContractError("encode: max_len must be >= 3, got " +
                        std::to_string(max_len));
  }
  const std::size_t kept = std::min(tokens.size(), max_len - 2);
  TokenSequence seq;
  seq.ids.reserve(max_len);
  seq.ids.push_back(kStart);
  for (std::size_t i = 0; i < kept; ++i) seq.ids.push_back(vocab.id(tokens[i]));
  seq.ids.push_back(kEnd);
  seq.ids.resize(max_len, kPad);
  return seq;
}

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (const TokenId id : ids) {
    const std::string& token = vocab.token(id);
    if (id == kPad || id == kStart || id == kEnd) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

bool well_formed(const TokenSequence& seq, std::size_t max_len) {
  const auto& ids = seq.ids;
  if (ids.size() != max_len || ids.empty() || ids.front() != kStart) return false;
  const auto end = std::find(ids.begin(), ids.end(), kEnd);
  if (end == ids.end()) return false;
  for (auto it = ids.begin() + 1; it != end; ++it) {
    if (*it == kStart || *it == kPad) return false;
  }
  return std::all_of(end + 1, ids.end(), [](TokenId id) { return id == kPad; });
}

}  // namespace medrep
