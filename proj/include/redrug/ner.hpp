#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "redrug/corpus.hpp"
#include "redrug/text.hpp"

namespace redrug {

inline constexpr std::string_view kCrfTemplateVersion = "lex-shape-affix-w1/1";
inline constexpr int kCrfFormatVersion = 1;

// Feature ids for one token: lowercased word, collapsed word shape, prefixes
// and suffixes of length 1-3, digit and capitalization flags, a bias, the
// same word attributes for the neighbors at -1/+1 (prefixed "-1:"/"+1:"),
// and BOS/EOS at the sentence edges. Sorted, no duplicates.
std::vector<std::string> extract_features(std::span<const Token> tokens,
                                          std::size_t position);

// "Hepatoma" -> "Xx", "5-FU" -> "d-X", "p53" -> "xd".
std::string word_shape(std::string_view word);

class FeatureDictionary {
 public:
  FeatureDictionary() = default;
  explicit FeatureDictionary(std::vector<std::string> features);

  // Every feature fired anywhere in the sentences, in first-seen order.
  static FeatureDictionary build(std::span<const TaggedSentence> sentences);

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> find(const std::string& feature) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

// All CRF parameters in one flat buffer:
//   [emission F x T | transition T x T | start T | end T]
// transition(i, j) scores tag j following tag i.
class CrfWeights {
 public:
  CrfWeights() : CrfWeights(0) {}
  explicit CrfWeights(std::size_t num_features);

  std::size_t num_features() const noexcept { return num_features_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& emission(std::size_t feature, Tag tag) {
    return values_[feature * kNumTags + index(tag)];
  }
  double emission(std::size_t feature, Tag tag) const {
    return values_[feature * kNumTags + index(tag)];
  }
  double& transition(Tag from, Tag to) {
    return values_[transition_offset() + index(from) * kNumTags + index(to)];
  }
  double transition(Tag from, Tag to) const {
    return values_[transition_offset() + index(from) * kNumTags + index(to)];
  }
  double& start(Tag t) { return values_[start_offset() + index(t)]; }
  double start(Tag t) const { return values_[start_offset() + index(t)]; }
  double& end(Tag t) { return values_[end_offset() + index(t)]; }
  double end(Tag t) const { return values_[end_offset() + index(t)]; }

  friend bool operator==(const CrfWeights&, const CrfWeights&) = default;

 private:
  static std::size_t index(Tag t) { return static_cast<std::size_t>(t); }
  std::size_t transition_offset() const { return num_features_ * kNumTags; }
  std::size_t start_offset() const { return transition_offset() + kNumTags * kNumTags; }
  std::size_t end_offset() const { return start_offset() + kNumTags; }

  std::size_t num_features_;
  std::vector<double> values_;
};

struct CrfModel {
  FeatureDictionary features;
  CrfWeights weights;
  std::string feature_template_version{kCrfTemplateVersion};

  CrfModel() = default;
  explicit CrfModel(FeatureDictionary dict)
      : features(std::move(dict)), weights(features.size()) {}
};

// Per-position emission scores, n x T. Features unknown to the model add 0.
std::vector<std::array<double, kNumTags>> emission_scores(
    const CrfModel& model, std::span<const Token> tokens);

// Score of one tag sequence: emissions + transitions + start + end.
double sequence_score(const CrfModel& model, std::span<const Token> tokens,
                      std::span<const Tag> tags);

// log of the sum over all T^n tag sequences of exp(score). Throws
// EmptySentence for n = 0.
double forward_log_partition(const CrfModel& model, std::span<const Token> tokens);

// Posterior tag marginals p(y_i = t | x), n x T.
std::vector<std::array<double, kNumTags>> tag_marginals(
    const CrfModel& model, std::span<const Token> tokens);

// Highest-scoring tag sequence. Ties go to the lower tag index at every
// backpointer decision and at the final argmax.
std::vector<Tag> viterbi_decode(const CrfModel& model, std::span<const Token> tokens);

struct CrfObjective {
  double value = 0.0;
  CrfWeights gradient;
};

// sum over the batch of (log Z - gold score) + (l2 / 2) * ||w||^2, with its
// gradient (expected minus observed counts, plus l2 * w).
CrfObjective crf_neg_log_likelihood_and_grad(const CrfModel& model,
                                             std::span<const TaggedSentence> batch,
                                             double l2);

struct CrfTrainParams {
  double l2 = 1e-2;
  int epochs = 30;
  double learning_rate = 0.2;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  // Called after each epoch with the mean per-sentence objective on the
  // full training set.
  std::function<void(int epoch, double loss)> on_epoch;
};

// Mini-batch gradient descent from zero weights over the features observed
// in `dataset`. Shuffling is seeded, so equal inputs give equal models.
CrfModel train_crf(std::span<const TaggedSentence> dataset,
                   const CrfTrainParams& params);

// ---------------------------------------------------------------------------
// Entities and metrics

struct EntitySpan {
  std::size_t begin = 0;  // token index
  std::size_t end = 0;    // exclusive
  std::string surface;

  std::size_t length() const noexcept { return end - begin; }
  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

// Maximal B I* runs. An I-Cancer after O or at the sentence start opens a new
// span, as if it were B-Cancer.
std::vector<EntitySpan> decode_entities(std::span<const Token> tokens,
                                        std::span<const Tag> tags);

// Inverse of decode_entities over IOB-valid spans.
std::vector<Tag> tags_from_spans(std::size_t length, std::span<const EntitySpan> spans);

// |gold ∩ pred| / |gold| over unique surfaces after normalize_surface.
// 1.0 when gold is empty.
double entity_recall(std::span<const std::string> gold,
                     std::span<const std::string> pred);

// Mean over gold spans of the best token-level Jaccard overlap with any
// predicted span. 1.0 with no gold spans, 0.0 with gold but no predictions.
double overlap_score(std::span<const EntitySpan> gold,
                     std::span<const EntitySpan> pred);

// Fraction of gold spans reproduced exactly (same token range).
double exact_match_rate(std::span<const EntitySpan> gold,
                        std::span<const EntitySpan> pred);

struct NerMetrics {
  double recall = 1.0;
  double overlap = 1.0;
  std::size_t gold_entities = 0;  // unique normalized surfaces
  std::size_t gold_spans = 0;
};

// Corpus-level metrics: recall over unique surfaces of the whole set, overlap
// averaged over every gold span.
NerMetrics evaluate_ner(const CrfModel& model,
                        std::span<const TaggedSentence> sentences);

// Token lists per sentence, split after '.', '!' or '?' when whitespace and
// an uppercase token follow. Offsets index `text`.
std::vector<std::vector<Token>> split_sentences(std::string_view text);

// Normalized unique cancer mentions in `text`, in order of first appearance.
std::vector<std::string> extract_cancer_mentions(const CrfModel& model,
                                                 std::string_view text);

void save_crf_model(const std::filesystem::path& path, const CrfModel& model);
CrfModel load_crf_model(const std::filesystem::path& path);
nlohmann::json crf_model_to_json(const CrfModel& model);
CrfModel crf_model_from_json(const nlohmann::json& j);

}  // namespace redrug
