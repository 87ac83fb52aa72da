#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "redrug/text.hpp"

namespace redrug {

using Pmid = std::uint64_t;

struct AbstractRecord {
  Pmid pmid = 0;
  std::string title;
  std::string abstract_text;
  std::vector<std::string> publication_types;
  std::vector<std::string> mesh_terms;
  std::optional<std::string> journal;
  std::optional<int> year;

  friend bool operator==(const AbstractRecord&, const AbstractRecord&) = default;
};

// ---------------------------------------------------------------------------
// Label schemas

enum class AssociationLabel {
  NoRelation,
  NoPhenotypicOutcome,
  Effective,
  Detrimental,
  NoEffect,
  Inconclusive,
};

enum class CoarseLabel { Irrelevant, Relevant };

enum class StudyTypeLabel { Preclinical, ClinicalObservational, ClinicalTrial, Other };

inline constexpr std::array<AssociationLabel, 6> kAssociationLabels = {
    AssociationLabel::NoRelation,  AssociationLabel::NoPhenotypicOutcome,
    AssociationLabel::Effective,   AssociationLabel::Detrimental,
    AssociationLabel::NoEffect,    AssociationLabel::Inconclusive,
};
inline constexpr std::array<CoarseLabel, 2> kCoarseLabels = {
    CoarseLabel::Irrelevant, CoarseLabel::Relevant};
inline constexpr std::array<StudyTypeLabel, 4> kStudyTypeLabels = {
    StudyTypeLabel::Preclinical, StudyTypeLabel::ClinicalObservational,
    StudyTypeLabel::ClinicalTrial, StudyTypeLabel::Other};

constexpr CoarseLabel coarse(AssociationLabel label) {
  return label == AssociationLabel::NoRelation ||
                 label == AssociationLabel::NoPhenotypicOutcome
             ? CoarseLabel::Irrelevant
             : CoarseLabel::Relevant;
}

std::string_view to_string(AssociationLabel label);
std::string_view to_string(CoarseLabel label);
std::string_view to_string(StudyTypeLabel label);

// Human-readable row names used in the dataset statistics table.
std::string_view display_name(AssociationLabel label);

// Throw Error(UnknownLabel) on anything outside the closed schema.
AssociationLabel parse_association_label(std::string_view s);
CoarseLabel parse_coarse_label(std::string_view s);
StudyTypeLabel parse_study_type_label(std::string_view s);

// Label names in schema order, for classifier class lists.
std::vector<std::string> association_class_names();
std::vector<std::string> coarse_class_names();
std::vector<std::string> study_type_class_names();

// ---------------------------------------------------------------------------
// Datasets

struct AssociationExample {
  Pmid pmid = 0;
  std::string drug;
  std::string cancer;
  AssociationLabel label = AssociationLabel::NoRelation;

  friend bool operator==(const AssociationExample&,
                         const AssociationExample&) = default;
};

struct StudyTypeExample {
  Pmid pmid = 0;
  StudyTypeLabel label = StudyTypeLabel::Other;

  friend bool operator==(const StudyTypeExample&,
                         const StudyTypeExample&) = default;
};

enum class Tag : int { O = 0, BCancer = 1, ICancer = 2 };
inline constexpr std::size_t kNumTags = 3;

std::string_view to_string(Tag tag);
Tag parse_tag(std::string_view s);

struct TaggedSentence {
  std::vector<Token> tokens;
  std::vector<Tag> tags;
};

// I-Cancer never follows O or the sentence start.
bool is_iob_valid(std::span<const Tag> tags);

// Strict accepts only B-Cancer/I-Cancer/O. CancerOnly keeps the Cancer type
// from a multi-type corpus (e.g. BioNLP13CG) and maps every other type to O.
enum class NerTagPolicy { Strict, CancerOnly };

struct AssociationOutcome {
  std::variant<AssociationLabel, CoarseLabel> label;

  std::string_view name() const;
  friend bool operator==(const AssociationOutcome&,
                         const AssociationOutcome&) = default;
};

struct EvidenceRecord {
  std::string drug;
  std::string cancer;
  AssociationOutcome association;
  StudyTypeLabel study_type = StudyTypeLabel::Other;
  Pmid pmid = 0;
  std::map<std::string, double> association_scores;
  std::map<std::string, double> study_scores;

  friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

// Each score map sums to 1 within 1e-6 and its argmax is the stored label.
bool evidence_invariants_hold(const EvidenceRecord& record);

// ---------------------------------------------------------------------------
// Parsing and I/O

// PubmedArticleSet subset: PMID, ArticleTitle, AbstractText, PublicationType,
// MeshHeading/DescriptorName, Journal/Title, JournalIssue/PubDate/Year.
std::vector<AbstractRecord> parse_pubmed_xml(std::string_view xml_bytes);

// Inverse of parse_pubmed_xml for the fields it reads.
std::string write_pubmed_xml(std::span<const AbstractRecord> records);

nlohmann::ordered_json to_json(const AbstractRecord& record);
AbstractRecord abstract_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const EvidenceRecord& record);
EvidenceRecord evidence_from_json(const nlohmann::json& j);

std::vector<AbstractRecord> load_abstracts(const std::filesystem::path& path);
void save_abstracts(const std::filesystem::path& path,
                    std::span<const AbstractRecord> records);

std::vector<AssociationExample> load_association_dataset(
    const std::filesystem::path& path);
std::vector<StudyTypeExample> load_studytype_dataset(
    const std::filesystem::path& path);
std::vector<TaggedSentence> load_ner_dataset(
    const std::filesystem::path& path,
    NerTagPolicy policy = NerTagPolicy::Strict);

// The same parsers over in-memory text, for callers that already hold it.
std::vector<AbstractRecord> parse_abstracts_jsonl(std::string_view text);
std::vector<AssociationExample> parse_association_jsonl(std::string_view text);
std::vector<StudyTypeExample> parse_studytype_jsonl(std::string_view text);
std::vector<TaggedSentence> parse_ner_text(std::string_view text,
                                           NerTagPolicy policy);

void save_association_dataset(const std::filesystem::path& path,
                              std::span<const AssociationExample> examples);
void save_studytype_dataset(const std::filesystem::path& path,
                            std::span<const StudyTypeExample> examples);
void save_ner_dataset(const std::filesystem::path& path,
                      std::span<const TaggedSentence> sentences);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// ---------------------------------------------------------------------------
// Statistics

struct AssociationStats {
  std::map<AssociationLabel, std::size_t> counts;  // all six labels present
  std::size_t irrelevant = 0;
  std::size_t relevant = 0;
  std::size_t total = 0;
};

AssociationStats dataset_stats(std::span<const AssociationExample> examples);

std::map<StudyTypeLabel, std::size_t> studytype_stats(
    std::span<const StudyTypeExample> examples);

// Plain-text table: coarse level, association, count.
std::string format_association_stats(const AssociationStats& stats);
std::string format_studytype_stats(
    const std::map<StudyTypeLabel, std::size_t>& counts);

}  // namespace redrug
