#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "redrug/classifiers.hpp"
#include "redrug/corpus.hpp"
#include "redrug/filter.hpp"
#include "redrug/ner.hpp"
#include "redrug/pubmed_client.hpp"
#include "redrug/studytype.hpp"

namespace redrug {

enum class TransportKind { Http, Replay };

// Loaded from a JSON file; relative paths resolve against the file's
// directory. Keys:
//   drugs                  text file, one drug per line          (required)
//   synonyms               {"drug": ["alias", ...]}              (optional)
//   cancer_terms, design_terms, excluded_pub_types  term files   (optional)
//   client                 {transport: "http"|"replay", replay_dir, base_url,
//                           max_requests_per_second, page_size, max_retries,
//                           backoff_ms, limit}
//   models                 {ner, association, study_type, embeddings?}
//   mode                   "six" | "binary"
//   output                 JSONL path; summary defaults to <output>.summary.json
struct PipelineConfig {
  std::filesystem::path drugs;
  std::optional<std::filesystem::path> synonyms;
  std::optional<std::filesystem::path> cancer_terms;
  std::optional<std::filesystem::path> design_terms;
  std::optional<std::filesystem::path> excluded_pub_types;

  ClientConfig client;
  TransportKind transport = TransportKind::Http;
  std::optional<std::filesystem::path> replay_dir;
  std::optional<std::size_t> limit;

  std::filesystem::path ner_model;
  std::filesystem::path association_model;
  std::filesystem::path study_model;
  // Only checked for existence; DAN models carry their own vectors.
  std::optional<std::filesystem::path> embeddings;

  AssociationMode mode = AssociationMode::SixClass;
  std::filesystem::path output;
  std::filesystem::path summary;

  // Throws InvalidConfig for a missing input file, a missing replay directory
  // or an output directory that does not exist.
  void validate() const;
};

PipelineConfig parse_pipeline_config(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir);
// Throws InvalidConfig when the file is missing or malformed.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& config);

struct RunSummary {
  std::size_t drugs = 0;
  std::size_t queries = 0;
  std::size_t fetched = 0;
  std::map<FilterReason, std::size_t> filter_reasons;  // includes Kept
  std::size_t without_entities = 0;
  std::size_t pairs_classified = 0;
  std::size_t records = 0;
  std::size_t record_errors = 0;
};

nlohmann::ordered_json summary_to_json(const RunSummary& summary);

struct PipelineModels {
  CrfModel ner;
  AssociationModel association;
  StudyTypeModel study;
};

// Throws ModeMismatch when the association model was trained for another mode.
PipelineModels load_pipeline_models(const PipelineConfig& config);

struct PipelineResult {
  std::vector<EvidenceRecord> records;
  RunSummary summary;
};

// Normalized unique cancer mentions of the title, then the abstract.
std::vector<std::string> record_cancer_mentions(const CrfModel& ner,
                                                const AbstractRecord& record);

// Records for one drug's fetched abstracts, ordered by pmid then mention.
std::vector<EvidenceRecord> evidence_for_drug(const std::string& drug,
                                              const std::vector<std::string>& synonyms,
                                              std::span<const AbstractRecord> fetched,
                                              const FilterRules& rules,
                                              const PipelineModels& models,
                                              AssociationMode mode, RunSummary& summary);

// Query, fetch, filter, tag, classify. `transport` and `clock` override the
// configured ones (tests).
PipelineResult run_pipeline(const PipelineConfig& config,
                            std::shared_ptr<Transport> transport = nullptr,
                            std::shared_ptr<Clock> clock = nullptr);

// One JSON object per line, in record order.
std::string format_evidence_jsonl(std::span<const EvidenceRecord> records);

}  // namespace redrug
