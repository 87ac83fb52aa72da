#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace redrug {

struct Token {
  std::string surface;
  std::size_t start = 0;  // byte offset into the source text
  std::size_t end = 0;    // exclusive

  friend bool operator==(const Token&, const Token&) = default;
};

// Splits on whitespace (ASCII and the common Unicode space characters), then
// peels punctuation off both ends of each chunk as one-character tokens.
// Inside a chunk only the hard separators / \ ( ) [ ] { } ; " split; hyphens,
// digits, periods and the rest of the punctuation stay internal ("5-FU",
// "0.5", "IC50").
std::vector<Token> tokenize(std::string_view text);

// Surfaces only.
std::vector<std::string> tokenize_words(std::string_view text);

// ASCII lower-casing; bytes outside ASCII pass through unchanged.
std::string case_fold(std::string_view s);

// Case-folds and collapses whitespace runs to a single space, trimming ends.
std::string normalize_surface(std::string_view s);

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, std::size_t min_count);

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t min_count() const noexcept { return min_count_; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::string& term(std::size_t index) const { return terms_.at(index); }

  // `term` must already be case-folded.
  std::optional<std::size_t> find(std::string_view term) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.min_count_ == b.min_count_ && a.terms_ == b.terms_;
  }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t min_count_ = 1;
};

// Case-folded terms with corpus frequency >= min_count, indexed by descending
// frequency with lexicographic tie-break.
Vocabulary build_vocab(std::span<const std::vector<std::string>> documents,
                       std::size_t min_count);

void to_json(nlohmann::json& j, const Vocabulary& vocab);
void from_json(const nlohmann::json& j, Vocabulary& vocab);

class SparseVector {
 public:
  using Entry = std::pair<std::size_t, double>;

  SparseVector() = default;
  explicit SparseVector(std::size_t dimension) : dimension_(dimension) {}
  // Entries must have strictly increasing indices below `dimension`; zero
  // values are dropped.
  SparseVector(std::size_t dimension, std::vector<Entry> entries);

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double l1_norm() const;
  double dot(std::span<const double> dense) const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::size_t dimension_ = 0;
  std::vector<Entry> entries_;
};

// Raw term counts of case-folded tokens; out-of-vocabulary tokens are skipped.
SparseVector bow_vector(std::span<const std::string> tokens,
                        const Vocabulary& vocab);

// Blocks laid end to end, each offset by the dimensions preceding it.
SparseVector concat_blocks(std::span<const SparseVector> blocks);

// [abstract | drug | cancer] over one shared vocabulary: dimension 3|V|.
SparseVector concat_fields(const SparseVector& abstract_vec,
                           const SparseVector& drug_vec,
                           const SparseVector& cancer_vec);

}  // namespace redrug
