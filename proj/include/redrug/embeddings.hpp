#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "redrug/text.hpp"

namespace redrug {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // `values` is row-major |V| x dim.
  EmbeddingTable(Vocabulary vocab, std::size_t dim, std::vector<double> values);

  const Vocabulary& vocab() const noexcept { return vocab_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return vocab_.size(); }

  std::span<const double> row(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  std::span<double> row(std::size_t index) {
    return {values_.data() + index * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  Vocabulary vocab_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

// Rows drawn uniformly from [-0.5/dim, 0.5/dim) with a seeded generator.
EmbeddingTable random_embedding_table(const Vocabulary& vocab, std::size_t dim,
                                      std::uint64_t seed);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SkipgramParams {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;  // decays linearly to 1e-4 of this value
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
  // Frequent-word subsampling threshold; 0 disables it.
  double subsample = 0.0;
  // Called after each epoch with the mean per-pair loss seen during it.
  std::function<void(int epoch, double loss)> on_epoch;
};

// Occurrence count of every vocabulary term in the (case-folded) corpus.
std::vector<std::size_t> term_counts(std::span<const std::vector<std::string>> corpus,
                                     const Vocabulary& vocab);

// count^0.75, normalized.
std::vector<double> negative_sampling_distribution(std::span<const std::size_t> counts);

struct SgnsPairGradient {
  double loss = 0.0;                 // -[log s(c.o) + sum_k log s(-c.n_k)]
  std::vector<double> center;        // d
  std::vector<double> context;       // d
  std::vector<double> negatives;     // k x d
};

// Loss and gradient for one (center, context) pair with k negative output
// vectors stored row-major in `negatives`.
SgnsPairGradient sgns_pair_loss_and_grad(std::span<const double> center,
                                         std::span<const double> context,
                                         std::span<const double> negatives);

// Skip-gram with negative sampling over case-folded tokens. Returns the
// center-vector table. Throws EmptyCorpus when nothing survives min_count.
EmbeddingTable train_skipgram(std::span<const std::vector<std::string>> corpus,
                              const SkipgramParams& params);

// Text format: header "V d", then V lines "token x1 ... xd".
EmbeddingTable load_word_vectors(const std::filesystem::path& path);
EmbeddingTable parse_word_vectors(std::string_view text);
void save_word_vectors(const std::filesystem::path& path, const EmbeddingTable& table);
std::string format_word_vectors(const EmbeddingTable& table);

}  // namespace redrug
