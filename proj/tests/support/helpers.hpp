// Small shared helpers for the test binaries.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "redrug/classifiers.hpp"
#include "redrug/corpus.hpp"
#include "redrug/error.hpp"
#include "redrug/ner.hpp"
#include "redrug/pipeline.hpp"
#include "redrug/studytype.hpp"

namespace redrug::test {

// Code of the redrug::Error thrown by `fn`, or nullopt if nothing was thrown.
inline std::optional<ErrorCode> thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::optional<std::size_t> thrown_line(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.line();
  }
  return std::nullopt;
}

inline std::filesystem::path fixture(const std::filesystem::path& name) {
  return std::filesystem::path(REDRUG_FIXTURE_DIR) / name;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("redrug_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// The three models the golden pipeline run uses, trained on the bundled
// fixtures with default parameters.
inline PipelineModels train_fixture_models() {
  PipelineModels m;
  m.ner = train_crf(load_ner_dataset(fixture("ner_train.conll")), CrfTrainParams{});

  const auto assoc_abstracts = load_abstracts(fixture("assoc_abstracts.jsonl"));
  m.association = train_association(load_association_dataset(fixture("assoc_separable.jsonl")),
                                    index_by_pmid(assoc_abstracts), AssociationTrainParams{});

  const auto study_abstracts = load_abstracts(fixture("study_abstracts.jsonl"));
  m.study = train_studytype(load_studytype_dataset(fixture("study_separable.jsonl")),
                            index_by_pmid(study_abstracts), StudyTrainParams{});
  return m;
}

// Writes the fixture models and a replay config into `dir`; returns the
// config path.
inline std::filesystem::path write_golden_setup(const std::filesystem::path& dir,
                                                const PipelineModels& models) {
  save_crf_model(dir / "ner.json", models.ner);
  save_association_model(dir / "assoc.json", models.association);
  save_studytype_model(dir / "study.json", models.study);
  const auto pipeline = fixture("pipeline");
  nlohmann::json cfg = {
      {"drugs", (pipeline / "drugs.txt").string()},
      {"synonyms", (pipeline / "synonyms.json").string()},
      {"client", {{"transport", "replay"}, {"replay_dir", pipeline.string()}}},
      {"models", {{"ner", "ner.json"}, {"association", "assoc.json"}, {"study_type", "study.json"}}},
      {"mode", "six"},
      {"output", "out.jsonl"}};
  const auto path = dir / "config.json";
  write_file(path, cfg.dump(2));
  return path;
}

}  // namespace redrug::test
