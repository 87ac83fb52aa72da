#include "redrug/filter.hpp"

#include <algorithm>

#include "redrug/error.hpp"
#include "redrug/query_builder.hpp"
#include "redrug/text.hpp"

namespace redrug {

std::string_view to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::Kept: return "Kept";
    case FilterReason::NoAbstract: return "NoAbstract";
    case FilterReason::DrugNotMentioned: return "DrugNotMentioned";
    case FilterReason::NoCancerTerm: return "NoCancerTerm";
    case FilterReason::ExcludedPubType: return "ExcludedPubType";
  }
  return "";
}

FilterRules FilterRules::defaults() {
  return {default_cancer_terms(), default_excluded_pub_types()};
}

namespace {

std::vector<std::string> folded_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(text)) out.push_back(case_fold(tok.surface));
  return out;
}

bool contains_sequence(const std::vector<std::string>& haystack,
                       const std::vector<std::string>& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

class FoldedRecord {
 public:
  explicit FoldedRecord(const AbstractRecord& r)
      : title_(folded_tokens(r.title)), abstract_(folded_tokens(r.abstract_text)) {}

  bool mentions(std::string_view phrase) const {
    const auto needle = folded_tokens(phrase);
    return contains_sequence(title_, needle) || contains_sequence(abstract_, needle);
  }

 private:
  std::vector<std::string> title_;
  std::vector<std::string> abstract_;
};

}  // namespace

bool contains_phrase(std::string_view text, std::string_view phrase) {
  return contains_sequence(folded_tokens(text), folded_tokens(phrase));
}

FilterDecision shallow_filter(const AbstractRecord& record, std::string_view drug,
                              std::span<const std::string> synonyms,
                              const FilterRules& rules) {
  if (drug.empty()) throw Error(ErrorCode::InvalidArgument, "drug is empty");
  if (record.abstract_text.empty()) return {false, FilterReason::NoAbstract};

  const FoldedRecord folded(record);
  bool drug_hit = folded.mentions(drug);
  for (std::size_t i = 0; !drug_hit && i < synonyms.size(); ++i) {
    drug_hit = folded.mentions(synonyms[i]);
  }
  if (!drug_hit) return {false, FilterReason::DrugNotMentioned};

  const bool cancer_hit = std::any_of(
      rules.cancer_terms.begin(), rules.cancer_terms.end(),
      [&](const std::string& term) { return folded.mentions(term); });
  if (!cancer_hit) return {false, FilterReason::NoCancerTerm};

  for (const auto& pt : record.publication_types) {
    if (std::find(rules.excluded_pub_types.begin(), rules.excluded_pub_types.end(),
                  pt) != rules.excluded_pub_types.end()) {
      return {false, FilterReason::ExcludedPubType};
    }
  }
  return {true, FilterReason::Kept};
}

}  // namespace redrug
