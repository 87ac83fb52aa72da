#include "redrug/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <nlohmann/json.hpp>

#include "redrug/error.hpp"

namespace redrug {

namespace {

// Length in bytes of a whitespace code point starting at text[i], or 0.
std::size_t whitespace_length(std::string_view text, std::size_t i) {
  const auto c = static_cast<unsigned char>(text[i]);
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
      c == '\f') {
    return 1;
  }
  auto byte = [&](std::size_t k) -> unsigned char {
    return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0;
  };
  // U+0085, U+00A0
  if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  // U+1680
  if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;
  if (c == 0xE2) {
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if (byte(1) == 0x80) {
      const unsigned char b = byte(2);
      if ((b >= 0x80 && b <= 0x8A) || b == 0xA8 || b == 0xA9 || b == 0xAF) {
        return 3;
      }
    }
    // U+205F
    if (byte(1) == 0x81 && byte(2) == 0x9F) return 3;
  }
  // U+3000
  if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;
  return 0;
}

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_hard_separator(char c) {
  switch (c) {
    case '/': case '\\': case '(': case ')': case '[': case ']':
    case '{': case '}': case ';': case '"':
      return true;
    default:
      return false;
  }
}

void emit(std::string_view text, std::size_t start, std::size_t end,
          std::vector<Token>& out) {
  if (start < end) {
    out.push_back({std::string(text.substr(start, end - start)), start, end});
  }
}

// One whitespace-free chunk [begin, end).
void split_chunk(std::string_view text, std::size_t begin, std::size_t end,
                 std::vector<Token>& out) {
  while (begin < end) {
    // Hard separators cut the chunk into pieces that are handled separately.
    std::size_t cut = begin;
    while (cut < end && !is_hard_separator(text[cut])) ++cut;

    std::size_t lo = begin;
    std::size_t hi = cut;
    while (lo < hi && is_punct(text[lo])) {
      emit(text, lo, lo + 1, out);
      ++lo;
    }
    std::size_t trail = hi;
    while (trail > lo && is_punct(text[trail - 1])) --trail;
    emit(text, lo, trail, out);
    for (std::size_t k = trail; k < hi; ++k) emit(text, k, k + 1, out);

    if (cut < end) emit(text, cut, cut + 1, out);
    begin = cut + 1;
  }
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::size_t ws = whitespace_length(text, i)) {
      i += ws;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && whitespace_length(text, j) == 0) ++j;
    split_chunk(text, i, j, out);
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) out.push_back(std::move(tok.surface));
  return out;
}

std::string case_fold(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string normalize_surface(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  bool pending_space = false;
  while (i < s.size()) {
    if (std::size_t ws = whitespace_length(s, i)) {
      pending_space = !out.empty();
      i += ws;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    char c = s[i++];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> terms, std::size_t min_count)
    : terms_(std::move(terms)), min_count_(min_count) {
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], i).second) {
      throw Error(ErrorCode::DuplicateKey,
                  "vocabulary term repeated: " + terms_[i]);
    }
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> documents,
                       std::size_t min_count) {
  if (min_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "min_count must be positive");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : documents) {
    for (const auto& tok : doc) ++counts[case_fold(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, n] : counts) {
    if (n >= min_count) kept.emplace_back(term, n);
  }
  // `counts` is already lexicographic, so a stable sort by count keeps ties
  // in lexicographic order.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<std::string> terms;
  terms.reserve(kept.size());
  for (auto& [term, n] : kept) terms.push_back(std::move(term));
  return Vocabulary(std::move(terms), min_count);
}

void to_json(nlohmann::json& j, const Vocabulary& vocab) {
  j = nlohmann::json{{"min_count", vocab.min_count()}, {"terms", vocab.terms()}};
}

void from_json(const nlohmann::json& j, Vocabulary& vocab) {
  vocab = Vocabulary(j.at("terms").get<std::vector<std::string>>(),
                     j.at("min_count").get<std::size_t>());
}

// ---------------------------------------------------------------------------
// SparseVector

SparseVector::SparseVector(std::size_t dimension, std::vector<Entry> entries)
    : dimension_(dimension) {
  entries_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto [index, value] = entries[i];
    if (index >= dimension) {
      throw Error(ErrorCode::DimensionMismatch,
                  "sparse index " + std::to_string(index) +
                      " out of range for dimension " +
                      std::to_string(dimension));
    }
    if (i > 0 && index <= entries[i - 1].first) {
      throw Error(ErrorCode::InvalidArgument,
                  "sparse indices must be strictly increasing");
    }
    if (value != 0.0) entries_.emplace_back(index, value);
  }
}

double SparseVector::l1_norm() const {
  double total = 0.0;
  for (const auto& [i, v] : entries_) total += v < 0 ? -v : v;
  return total;
}

double SparseVector::dot(std::span<const double> dense) const {
  if (dense.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                "dense operand has dimension " + std::to_string(dense.size()) +
                    ", expected " + std::to_string(dimension_));
  }
  double total = 0.0;
  for (const auto& [i, v] : entries_) total += v * dense[i];
  return total;
}

SparseVector bow_vector(std::span<const std::string> tokens,
                        const Vocabulary& vocab) {
  std::map<std::size_t, double> counts;
  for (const auto& tok : tokens) {
    if (auto idx = vocab.find(case_fold(tok))) counts[*idx] += 1.0;
  }
  return SparseVector(vocab.size(), {counts.begin(), counts.end()});
}

SparseVector concat_blocks(std::span<const SparseVector> blocks) {
  std::size_t offset = 0;
  std::vector<SparseVector::Entry> entries;
  for (const auto& block : blocks) {
    for (const auto& [i, v] : block.entries()) entries.emplace_back(offset + i, v);
    offset += block.dimension();
  }
  return SparseVector(offset, std::move(entries));
}

SparseVector concat_fields(const SparseVector& abstract_vec,
                           const SparseVector& drug_vec,
                           const SparseVector& cancer_vec) {
  if (drug_vec.dimension() != abstract_vec.dimension() ||
      cancer_vec.dimension() != abstract_vec.dimension()) {
    throw Error(ErrorCode::DimensionMismatch,
                "field vectors must share one vocabulary dimension");
  }
  const SparseVector blocks[] = {abstract_vec, drug_vec, cancer_vec};
  return concat_blocks(blocks);
}

}  // namespace redrug
