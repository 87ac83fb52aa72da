#include "redrug/query_builder.hpp"

#include <set>

#include "redrug/corpus.hpp"
#include "redrug/error.hpp"

#ifndef REDRUG_RESOURCE_DIR
#define REDRUG_RESOURCE_DIR "resources"
#endif

namespace redrug {

namespace {

void check_terms(const std::vector<std::string>& terms, std::string_view group) {
  std::set<std::string_view> seen;
  for (const auto& t : terms) {
    if (t.empty()) {
      throw Error(ErrorCode::InvalidTerm,
                  "empty term in " + std::string(group) + " group");
    }
    if (t.find('"') != std::string::npos) {
      throw Error(ErrorCode::InvalidTerm, "term contains a quote: " + t);
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::InvalidTerm,
                  "duplicate term in " + std::string(group) + " group: " + t);
    }
  }
}

std::string or_group(const std::vector<std::string>& terms,
                     const std::string& field_tag) {
  std::string out = "(";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) out += " OR ";
    out += '"';
    out += terms[i];
    out += "\"[";
    out += field_tag;
    out += ']';
  }
  out += ')';
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

void validate(const QuerySpec& spec) {
  if (spec.drug.empty()) throw Error(ErrorCode::InvalidTerm, "drug is empty");
  if (spec.field_tag.empty() ||
      spec.field_tag.find_first_of("[]\"") != std::string::npos) {
    throw Error(ErrorCode::InvalidTerm, "invalid field tag: " + spec.field_tag);
  }
  std::vector<std::string> drug_group{spec.drug};
  drug_group.insert(drug_group.end(), spec.synonyms.begin(), spec.synonyms.end());
  check_terms(drug_group, "drug");
  check_terms(spec.cancer_terms, "cancer");
  check_terms(spec.design_terms, "design");
}

std::string build_query(const QuerySpec& spec) {
  if (spec.cancer_terms.empty()) {
    throw Error(ErrorCode::EmptyTermList, "cancer term list is empty");
  }
  if (spec.design_terms.empty()) {
    throw Error(ErrorCode::EmptyTermList, "design term list is empty");
  }
  validate(spec);
  std::vector<std::string> drug_group{spec.drug};
  drug_group.insert(drug_group.end(), spec.synonyms.begin(), spec.synonyms.end());
  return or_group(drug_group, spec.field_tag) + " AND " +
         or_group(spec.cancer_terms, spec.field_tag) + " AND " +
         or_group(spec.design_terms, spec.field_tag);
}

std::vector<std::string> parse_term_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = trim_copy(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    out.push_back(std::move(line));
  }
  return out;
}

std::vector<std::string> load_term_file(const std::filesystem::path& path) {
  return parse_term_list(read_file(path));
}

const std::vector<std::string>& default_cancer_terms() {
  static const std::vector<std::string> terms = {
      "cancer", "neoplasm", "neoplasms", "tumor",
      "tumour", "carcinoma", "malignancy",
  };
  return terms;
}

const std::vector<std::string>& default_design_terms() {
  static const std::vector<std::string> terms = {
      "randomized controlled trial",
      "controlled clinical trial",
      "clinical trial",
      "random allocation",
      "double-blind",
      "single-blind",
      "placebo",
      "comparative study",
      "evaluation study",
      "follow-up study",
      "prospective study",
      "volunteer",
      "in vitro",
      "in vivo",
      "xenograft",
      "cell line",
  };
  return terms;
}

const std::vector<std::string>& default_excluded_pub_types() {
  static const std::vector<std::string> types = {"Review", "Editorial", "Comment"};
  return types;
}

std::filesystem::path resource_dir() { return REDRUG_RESOURCE_DIR; }

}  // namespace redrug
