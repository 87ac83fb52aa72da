#include "redrug/studytype.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "redrug/error.hpp"

namespace redrug {

using nlohmann::json;

std::string_view to_string(StudyFeatureMode mode) {
  switch (mode) {
    case StudyFeatureMode::PT: return "pt";
    case StudyFeatureMode::BoW: return "bow";
    case StudyFeatureMode::MeSH: return "mesh";
    case StudyFeatureMode::All: return "all";
  }
  return "all";
}

StudyFeatureMode parse_study_feature_mode(std::string_view s) {
  const std::string f = case_fold(s);
  if (f == "pt") return StudyFeatureMode::PT;
  if (f == "bow") return StudyFeatureMode::BoW;
  if (f == "mesh") return StudyFeatureMode::MeSH;
  if (f == "all") return StudyFeatureMode::All;
  throw Error(ErrorCode::InvalidArgument, "unknown feature mode '" + std::string(s) + "'");
}

std::size_t StudyFeatureSpace::dimension() const {
  switch (mode) {
    case StudyFeatureMode::PT: return pt_index.size();
    case StudyFeatureMode::BoW: return vocab.size();
    case StudyFeatureMode::MeSH: return mesh_index.size();
    case StudyFeatureMode::All: return pt_index.size() + vocab.size() + mesh_index.size();
  }
  return 0;
}

namespace {

SparseVector binary_bag(std::span<const std::string> values, const Vocabulary& index) {
  std::set<std::size_t> hits;
  for (const auto& v : values) {
    if (auto id = index.find(v)) hits.insert(*id);
  }
  std::vector<SparseVector::Entry> entries;
  for (std::size_t id : hits) entries.emplace_back(id, 1.0);
  return SparseVector(index.size(), std::move(entries));
}

Vocabulary distinct_values(std::span<const AbstractRecord* const> records,
                           std::vector<std::string> AbstractRecord::*field) {
  std::set<std::string> values;
  for (const auto* r : records) values.insert((r->*field).begin(), (r->*field).end());
  return Vocabulary(std::vector<std::string>(values.begin(), values.end()), 1);
}

}  // namespace

SparseVector study_features(const AbstractRecord& record, StudyFeatureMode mode,
                            const Vocabulary& vocab, const Vocabulary& pt_index,
                            const Vocabulary& mesh_index) {
  switch (mode) {
    case StudyFeatureMode::PT: return binary_bag(record.publication_types, pt_index);
    case StudyFeatureMode::BoW: return bow_vector(abstract_tokens(record), vocab);
    case StudyFeatureMode::MeSH: return binary_bag(record.mesh_terms, mesh_index);
    case StudyFeatureMode::All: {
      const SparseVector blocks[] = {binary_bag(record.publication_types, pt_index),
                                     bow_vector(abstract_tokens(record), vocab),
                                     binary_bag(record.mesh_terms, mesh_index)};
      return concat_blocks(blocks);
    }
  }
  return {};
}

SparseVector study_features(const AbstractRecord& record, const StudyFeatureSpace& space) {
  return study_features(record, space.mode, space.vocab, space.pt_index, space.mesh_index);
}

Vocabulary build_pt_index(std::span<const AbstractRecord* const> records) {
  return distinct_values(records, &AbstractRecord::publication_types);
}

Vocabulary build_mesh_index(std::span<const AbstractRecord* const> records) {
  return distinct_values(records, &AbstractRecord::mesh_terms);
}

StudyFeatureSpace build_study_feature_space(std::span<const AbstractRecord* const> records,
                                            StudyFeatureMode mode, std::size_t min_count) {
  StudyFeatureSpace space;
  space.mode = mode;
  // Unused blocks stay empty so the feature dimension matches the mode.
  if (mode == StudyFeatureMode::PT || mode == StudyFeatureMode::All) {
    space.pt_index = build_pt_index(records);
  }
  if (mode == StudyFeatureMode::MeSH || mode == StudyFeatureMode::All) {
    space.mesh_index = build_mesh_index(records);
  }
  if (mode == StudyFeatureMode::BoW || mode == StudyFeatureMode::All) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(records.size());
    for (const auto* r : records) docs.push_back(abstract_tokens(*r));
    space.vocab = build_vocab(docs, min_count);
  }
  return space;
}

StudyTypeModel train_studytype(std::span<const StudyTypeExample> examples,
                               const AbstractIndex& abstracts,
                               const StudyTrainParams& params) {
  std::vector<const AbstractRecord*> records;
  std::set<Pmid> seen;
  for (const auto& ex : examples) {
    const auto& r = lookup_abstract(abstracts, ex.pmid);
    if (seen.insert(ex.pmid).second) records.push_back(&r);
  }
  StudyTypeModel model;
  model.space = build_study_feature_space(records, params.mode, params.min_count);
  const std::size_t dim = model.space.dimension();
  if (dim == 0) {
    throw Error(ErrorCode::EmptyCorpus, "training split yields no study-type features");
  }
  std::vector<LabeledVector> data;
  data.reserve(examples.size());
  for (const auto& ex : examples) {
    data.push_back({study_features(lookup_abstract(abstracts, ex.pmid), model.space),
                    static_cast<std::size_t>(ex.label), 1.0});
  }
  model.logreg = logreg_train(data, study_type_class_names(), dim, params.logreg);
  model.logreg.feature_space_tag = "study/" + std::string(to_string(params.mode));
  return model;
}

StudyTypePrediction predict_studytype(const StudyTypeModel& model,
                                      const AbstractRecord& record) {
  const Prediction p = logreg_predict(model.logreg, study_features(record, model.space));
  StudyTypePrediction out;
  out.label = kStudyTypeLabels.at(p.label);
  out.scores = score_map(model.logreg.classes, p.probabilities);
  return out;
}

json studytype_model_to_json(const StudyTypeModel& model) {
  return json{{"format_version", kClassifierFormatVersion},
              {"mode", to_string(model.space.mode)},
              {"vocab", model.space.vocab},
              {"pt_index", model.space.pt_index.terms()},
              {"mesh_index", model.space.mesh_index.terms()},
              {"model", logreg_to_json(model.logreg)}};
}

StudyTypeModel studytype_model_from_json(const json& j) {
  if (j.value("format_version", -1) != kClassifierFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "unsupported study-type model version");
  }
  StudyTypeModel model;
  model.space.mode = parse_study_feature_mode(j.at("mode").get<std::string>());
  model.space.vocab = j.at("vocab").get<Vocabulary>();
  model.space.pt_index = Vocabulary(j.at("pt_index").get<std::vector<std::string>>(), 1);
  model.space.mesh_index = Vocabulary(j.at("mesh_index").get<std::vector<std::string>>(), 1);
  model.logreg = logreg_from_json(j.at("model"));
  if (model.logreg.dim != model.space.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "model dimension != feature space dimension");
  }
  if (model.logreg.classes != study_type_class_names()) {
    throw Error(ErrorCode::InvalidArgument, "not a study-type model");
  }
  return model;
}

void save_studytype_model(const std::filesystem::path& path, const StudyTypeModel& model) {
  write_file(path, studytype_model_to_json(model).dump());
}

StudyTypeModel load_studytype_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return studytype_model_from_json(j);
}

}  // namespace redrug
