#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "redrug/corpus.hpp"
#include "redrug/embeddings.hpp"
#include "redrug/text.hpp"

namespace redrug {

inline constexpr int kClassifierFormatVersion = 1;

// Max-subtracted, so large logits do not overflow.
std::vector<double> softmax(std::span<const double> logits);

// First index of the maximum; ties resolve to the earlier class.
std::size_t argmax(std::span<const double> values);

std::map<std::string, double> score_map(const std::vector<std::string>& classes,
                                        std::span<const double> probabilities);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

// ---------------------------------------------------------------------------
// Multinomial logistic regression

struct LogRegModel {
  std::vector<std::string> classes;
  std::size_t dim = 0;
  std::vector<double> weights;  // classes.size() x dim, row-major
  std::vector<double> bias;     // classes.size()
  std::string feature_space_tag;

  LogRegModel() = default;
  LogRegModel(std::vector<std::string> class_list, std::size_t feature_dim,
              std::string tag = {});

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::span<double> row(std::size_t c) { return {weights.data() + c * dim, dim}; }
  std::span<const double> row(std::size_t c) const {
    return {weights.data() + c * dim, dim};
  }
};

struct LabeledVector {
  SparseVector features;
  std::size_t label = 0;
  double weight = 1.0;
};

struct LogRegParams {
  double l2 = 1e-4;
  int epochs = 40;
  double learning_rate = 0.5;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  // Mean per-example objective on the training set after each epoch.
  std::function<void(int epoch, double loss)> on_epoch;
};

struct LogRegObjective {
  double value = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

// sum of weighted cross-entropy + (l2 / 2) * ||W||^2; the bias is not
// regularized.
LogRegObjective logreg_loss_and_grad(const LogRegModel& model,
                                     std::span<const LabeledVector> examples,
                                     double l2);

// Zero-initialized mini-batch gradient descent. Throws SingleClassDataset
// unless at least two distinct labels occur.
LogRegModel logreg_train(std::span<const LabeledVector> examples,
                         std::vector<std::string> classes, std::size_t feature_dim,
                         const LogRegParams& params);

// Throws DimensionMismatch when the vector does not match the model.
Prediction logreg_predict(const LogRegModel& model, const SparseVector& features);

nlohmann::json logreg_to_json(const LogRegModel& model);
LogRegModel logreg_from_json(const nlohmann::json& j);

// Sets each weight to N / (C * count(label)).
void apply_inverse_frequency_weights(std::span<LabeledVector> examples,
                                     std::size_t num_classes);

// ---------------------------------------------------------------------------
// Deep averaging network

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}
};

// Three token fields: abstract (title + text), drug, cancer.
struct DanFields {
  std::vector<std::string> abstract;
  std::vector<std::string> drug;
  std::vector<std::string> cancer;
};

struct DanExample {
  DanFields fields;
  std::size_t label = 0;
  double weight = 1.0;
};

// Each field is the mean of its token vectors; the three means are
// concatenated (3d), passed through rectified hidden layers, then a softmax
// output layer.
struct DanModel {
  EmbeddingTable embeddings;
  std::vector<DenseLayer> hidden;
  DenseLayer output;
  double word_dropout_p = 0.3;
  std::vector<std::string> classes;

  // Throws InvalidArgument when layer dimensions do not chain.
  void check() const;
};

struct DanForward {
  std::vector<double> probabilities;
  std::array<std::vector<std::size_t>, 3> kept;  // embedding rows per field
  std::vector<std::vector<double>> activations;  // input, then each hidden output
  std::vector<std::vector<double>> pre_activations;
};

// Token ids per field, case-folded, OOV skipped, before dropout.
std::array<std::vector<std::size_t>, 3> dan_field_ids(const DanModel& model,
                                                      const DanFields& fields);

// Word dropout is applied (seeded) only in train_mode. Throws AllFieldsEmpty
// when no field has an in-vocabulary token.
DanForward dan_forward(const DanModel& model, const DanFields& fields,
                       bool train_mode, std::uint64_t seed);

struct DanGradient {
  double loss = 0.0;
  std::vector<DenseLayer> hidden;
  DenseLayer output;
  std::map<std::size_t, std::vector<double>> embedding_rows;
};

// Weighted cross-entropy over `examples` + (l2 / 2) * sum of squared hidden
// and output weight matrices. Dropout seeds are seed + example index.
DanGradient dan_loss_and_grad(const DanModel& model,
                              std::span<const DanExample> examples, double l2,
                              bool train_mode, std::uint64_t seed);

// AdaGrad scales each parameter's step by its gradient history, which copes
// with the small magnitudes of averaged word vectors.
enum class DanOptimizer { Sgd, AdaGrad };

std::string_view to_string(DanOptimizer optimizer);
DanOptimizer parse_dan_optimizer(std::string_view s);

struct DanParams {
  int epochs = 30;
  double learning_rate = 0.05;
  DanOptimizer optimizer = DanOptimizer::AdaGrad;
  double l2 = 1e-5;
  double word_dropout_p = 0.3;
  std::size_t hidden_layers = 1;
  std::size_t hidden_width = 0;  // 0 means 3d
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  std::function<void(int epoch, double loss)> on_epoch;
};

// Glorot-uniform layers and zero biases on top of a copy of `init`.
DanModel dan_init(const EmbeddingTable& init, std::vector<std::string> classes,
                  const DanParams& params);

// Backpropagates through the output, hidden, averaging and embedding layers.
// Each step uses the batch-mean gradient plus (l2 / N) * W on weight
// matrices. Throws SingleClassDataset unless two labels occur.
DanModel dan_train(std::span<const DanExample> examples,
                   std::vector<std::string> classes, const DanParams& params,
                   const EmbeddingTable& init);

Prediction dan_predict(const DanModel& model, const DanFields& fields);

nlohmann::json dan_to_json(const DanModel& model);
DanModel dan_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Therapeutic association

enum class AssociationMode { Binary, SixClass };
enum class ClassifierKind { LogReg, Dan };

std::string_view to_string(AssociationMode mode);
std::string_view to_string(ClassifierKind kind);
AssociationMode parse_association_mode(std::string_view s);
ClassifierKind parse_classifier_kind(std::string_view s);

std::vector<std::string> class_names(AssociationMode mode);

// Class index of a label under a mode (Binary uses coarse()).
std::size_t association_class_index(AssociationLabel label, AssociationMode mode);

struct AssociationModel {
  ClassifierKind kind = ClassifierKind::LogReg;
  AssociationMode mode = AssociationMode::SixClass;
  Vocabulary vocab;  // shared abstract/drug/cancer vocabulary, LogReg only
  LogRegModel logreg;
  DanModel dan;
};

struct AssociationPrediction {
  AssociationOutcome label;
  std::map<std::string, double> scores;
};

// Tokens of title + abstract text.
std::vector<std::string> abstract_tokens(const AbstractRecord& record);

SparseVector association_features(const Vocabulary& vocab, const AbstractRecord& record,
                                  std::string_view drug, std::string_view cancer);
DanFields association_fields(const AbstractRecord& record, std::string_view drug,
                             std::string_view cancer);

// Throws ModeMismatch when the model was trained for the other mode.
AssociationPrediction classify_association(const AssociationModel& model,
                                           const AbstractRecord& record,
                                           std::string_view drug,
                                           std::string_view cancer,
                                           AssociationMode mode);

inline SkipgramParams association_skipgram_defaults() {
  SkipgramParams p;
  p.dim = 50;
  return p;
}

struct AssociationTrainParams {
  ClassifierKind kind = ClassifierKind::LogReg;
  AssociationMode mode = AssociationMode::SixClass;
  std::size_t min_count = 1;
  bool inverse_frequency_weights = false;
  LogRegParams logreg;
  DanParams dan;
  // Used to pretrain DAN vectors on the training abstracts when no external
  // table is supplied.
  SkipgramParams skipgram = association_skipgram_defaults();
};

using AbstractIndex = std::map<Pmid, AbstractRecord>;

AbstractIndex index_by_pmid(std::span<const AbstractRecord> records);

// Throws InvalidArgument when an example's pmid is missing from `abstracts`.
const AbstractRecord& lookup_abstract(const AbstractIndex& abstracts, Pmid pmid);

AssociationModel train_association(std::span<const AssociationExample> examples,
                                   const AbstractIndex& abstracts,
                                   const AssociationTrainParams& params,
                                   const EmbeddingTable* pretrained = nullptr);

nlohmann::json association_model_to_json(const AssociationModel& model);
AssociationModel association_model_from_json(const nlohmann::json& j);
void save_association_model(const std::filesystem::path& path,
                            const AssociationModel& model);
AssociationModel load_association_model(const std::filesystem::path& path);

}  // namespace redrug
