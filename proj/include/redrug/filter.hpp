#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redrug/corpus.hpp"

namespace redrug {

enum class FilterReason { Kept, NoAbstract, DrugNotMentioned, NoCancerTerm, ExcludedPubType };

std::string_view to_string(FilterReason reason);

struct FilterDecision {
  bool keep = false;
  FilterReason reason = FilterReason::NoAbstract;

  friend bool operator==(const FilterDecision&, const FilterDecision&) = default;
};

struct FilterRules {
  std::vector<std::string> cancer_terms;
  std::vector<std::string> excluded_pub_types;

  // Shipped term list and {"Review", "Editorial", "Comment"}.
  static FilterRules defaults();
};

// True when the case-folded token sequence of `phrase` occurs contiguously in
// the case-folded tokens of `text`.
bool contains_phrase(std::string_view text, std::string_view phrase);

// Rules are applied in a fixed order and the first failing one is reported:
// empty abstract, no drug/synonym mention in title or abstract, no cancer
// term, excluded publication type.
FilterDecision shallow_filter(const AbstractRecord& record, std::string_view drug,
                              std::span<const std::string> synonyms,
                              const FilterRules& rules);

}  // namespace redrug
