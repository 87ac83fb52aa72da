#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "redrug/classifiers.hpp"
#include "redrug/corpus.hpp"
#include "redrug/text.hpp"

namespace redrug {

enum class StudyFeatureMode { PT, BoW, MeSH, All };

std::string_view to_string(StudyFeatureMode mode);
StudyFeatureMode parse_study_feature_mode(std::string_view s);

// Publication types and MeSH descriptors are matched verbatim; BoW terms are
// case-folded. All three indices come from the training split.
struct StudyFeatureSpace {
  StudyFeatureMode mode = StudyFeatureMode::All;
  Vocabulary vocab;
  Vocabulary pt_index;
  Vocabulary mesh_index;

  std::size_t dimension() const;
};

// PT: one-hot over known publication types. BoW: term counts of title +
// abstract. MeSH: binary bag of descriptors. All: [PT | BoW | MeSH].
// Unknown PT and MeSH values are ignored.
SparseVector study_features(const AbstractRecord& record, StudyFeatureMode mode,
                            const Vocabulary& vocab, const Vocabulary& pt_index,
                            const Vocabulary& mesh_index);
SparseVector study_features(const AbstractRecord& record, const StudyFeatureSpace& space);

// Sorted distinct values over the given records.
Vocabulary build_pt_index(std::span<const AbstractRecord* const> records);
Vocabulary build_mesh_index(std::span<const AbstractRecord* const> records);

StudyFeatureSpace build_study_feature_space(std::span<const AbstractRecord* const> records,
                                            StudyFeatureMode mode, std::size_t min_count);

struct StudyTypeModel {
  StudyFeatureSpace space;
  LogRegModel logreg;
};

struct StudyTrainParams {
  StudyFeatureMode mode = StudyFeatureMode::All;
  std::size_t min_count = 1;
  LogRegParams logreg;
};

StudyTypeModel train_studytype(std::span<const StudyTypeExample> examples,
                               const AbstractIndex& abstracts,
                               const StudyTrainParams& params);

struct StudyTypePrediction {
  StudyTypeLabel label = StudyTypeLabel::Other;
  std::map<std::string, double> scores;
};

StudyTypePrediction predict_studytype(const StudyTypeModel& model,
                                      const AbstractRecord& record);

nlohmann::json studytype_model_to_json(const StudyTypeModel& model);
StudyTypeModel studytype_model_from_json(const nlohmann::json& j);
void save_studytype_model(const std::filesystem::path& path, const StudyTypeModel& model);
StudyTypeModel load_studytype_model(const std::filesystem::path& path);

}  // namespace redrug
