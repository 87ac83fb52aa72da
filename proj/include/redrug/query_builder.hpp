#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace redrug {

struct QuerySpec {
  std::string drug;
  std::vector<std::string> synonyms;
  std::vector<std::string> cancer_terms;
  std::vector<std::string> design_terms;
  std::string field_tag = "tiab";
};

// Throws InvalidTerm for an empty drug, empty or duplicated terms, or terms
// containing a double quote (which would break the quoting). Empty groups
// are reported by build_query as EmptyTermList.
void validate(const QuerySpec& spec);

// ("drug"[tiab] OR "syn"[tiab]) AND ("c1"[tiab] OR ...) AND ("d1"[tiab] OR ...)
std::string build_query(const QuerySpec& spec);

// One term per line, UTF-8; blank lines and '#' comments skipped, surrounding
// whitespace trimmed.
std::vector<std::string> load_term_file(const std::filesystem::path& path);
std::vector<std::string> parse_term_list(std::string_view text);

// Lists shipped in resources/; used when no resource path is configured.
const std::vector<std::string>& default_cancer_terms();
const std::vector<std::string>& default_design_terms();
const std::vector<std::string>& default_excluded_pub_types();

// Directory holding the shipped resource files.
std::filesystem::path resource_dir();

}  // namespace redrug
