#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "redrug/classifiers.hpp"
#include "redrug/corpus.hpp"
#include "redrug/studytype.hpp"

namespace redrug {

struct FoldAssignment {
  std::size_t k = 0;
  std::map<Pmid, std::size_t> fold;  // pmid -> [0, k)

  std::size_t fold_of(Pmid pmid) const;
  std::vector<std::size_t> sizes() const;
};

// Unique pmids are sorted, shuffled with a seeded generator, then dealt
// round-robin. Throws TooFewDocuments when k < 2 or there are fewer than k
// distinct pmids.
FoldAssignment kfold_split(std::span<const Pmid> pmids, std::size_t k, std::uint64_t seed);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct ClassReport {
  std::vector<std::string> classes;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;

  const ClassMetrics& at(std::string_view cls) const;
};

// 0/0 is taken as 0 for precision, recall and F1 alike.
ClassReport f_score_report(std::span<const std::pair<std::size_t, std::size_t>> gold_pred,
                           const std::vector<std::string>& classes);
// Labels by name; throws UnknownLabel outside `classes`.
ClassReport f_score_report(std::span<const std::pair<std::string, std::string>> gold_pred,
                           const std::vector<std::string>& classes);

struct CvReport {
  std::vector<ClassReport> folds;
  ClassReport mean;    // unweighted mean of the per-fold values
  ClassReport pooled;  // one report over every held-out prediction
  FoldAssignment assignment;
};

// Maps an example index to a predicted class index.
using FoldPredictor = std::function<std::size_t(std::size_t example)>;
// Trains on the given example indices and returns a predictor.
using FoldTrainer =
    std::function<FoldPredictor(std::size_t fold, std::span<const std::size_t> train)>;

// Folds are trained independently; `threads` > 1 runs them concurrently,
// which requires a thread-safe trainer. Results do not depend on it.
CvReport cross_validate(std::span<const Pmid> example_pmids, std::span<const std::size_t> gold,
                        const std::vector<std::string>& classes,
                        const FoldAssignment& assignment, const FoldTrainer& trainer,
                        std::size_t threads = 1);

struct AssociationCvOptions {
  // Train six-class models and score their coarse projection against the
  // binary gold labels.
  bool binary_from_six = false;
  // Optional external vectors for DAN (unlabelled pretraining corpus).
  const EmbeddingTable* pretrained = nullptr;
  // Called with every fold model and the examples it was trained on.
  std::function<void(std::size_t fold, const AssociationModel& model,
                     std::span<const AssociationExample> train)>
      on_fold_model;
  std::size_t threads = 1;
};

CvReport cross_validate_association(std::span<const AssociationExample> examples,
                                    const AbstractIndex& abstracts,
                                    const AssociationTrainParams& params, std::size_t k,
                                    std::uint64_t seed,
                                    const AssociationCvOptions& options = {});

struct StudyCvOptions {
  std::function<void(std::size_t fold, const StudyTypeModel& model,
                     std::span<const StudyTypeExample> train)>
      on_fold_model;
  std::size_t threads = 1;
};

CvReport cross_validate_studytype(std::span<const StudyTypeExample> examples,
                                  const AbstractIndex& abstracts,
                                  const StudyTrainParams& params, std::size_t k,
                                  std::uint64_t seed, const StudyCvOptions& options = {});

nlohmann::json class_report_to_json(const ClassReport& report);
nlohmann::json cv_report_to_json(const CvReport& report);

// One row per class, one F1 column per named report, two decimals.
std::string format_f1_table(const std::vector<std::pair<std::string, ClassReport>>& columns,
                            const std::map<std::string, std::string>& row_names = {});

}  // namespace redrug
