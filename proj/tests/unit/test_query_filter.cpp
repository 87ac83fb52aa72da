#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "redrug/filter.hpp"
#include "redrug/query_builder.hpp"
#include "support/helpers.hpp"

using namespace redrug;
using redrug::test::fixture;
using redrug::test::thrown_code;

namespace {

QuerySpec adapalene_spec() {
  QuerySpec s;
  s.drug = "adapalene";
  s.cancer_terms = {"cancer", "neoplasm"};
  s.design_terms = {"randomized controlled trial", "in vitro"};
  return s;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

AbstractRecord figure_two_record() {
  for (const auto& r : load_abstracts(fixture("pipeline/corpus.jsonl"))) {
    if (r.pmid == 15105045) return r;
  }
  throw std::runtime_error("fixture record missing");
}

}  // namespace

TEST(Query, TemplateExpansion) {
  EXPECT_EQ(build_query(adapalene_spec()),
            R"(("adapalene"[tiab]) AND ("cancer"[tiab] OR "neoplasm"[tiab]) AND )"
            R"(("randomized controlled trial"[tiab] OR "in vitro"[tiab]))");
}

TEST(Query, SynonymsJoinTheDrugGroup) {
  auto s = adapalene_spec();
  s.synonyms = {"differin"};
  const auto q = build_query(s);
  EXPECT_EQ(q.substr(0, q.find(" AND ")), R"(("adapalene"[tiab] OR "differin"[tiab]))");
}

TEST(Query, Errors) {
  auto s = adapalene_spec();
  s.cancer_terms.clear();
  EXPECT_EQ(thrown_code([&] { build_query(s); }), ErrorCode::EmptyTermList);
  s = adapalene_spec();
  s.design_terms.clear();
  EXPECT_EQ(thrown_code([&] { build_query(s); }), ErrorCode::EmptyTermList);
  s = adapalene_spec();
  s.drug = "";
  EXPECT_TRUE(thrown_code([&] { build_query(s); }).has_value());
  s = adapalene_spec();
  s.cancer_terms.push_back("cancer");
  EXPECT_EQ(thrown_code([&] { build_query(s); }), ErrorCode::InvalidTerm);
  s = adapalene_spec();
  s.design_terms.push_back("");
  EXPECT_EQ(thrown_code([&] { build_query(s); }), ErrorCode::InvalidTerm);
  s = adapalene_spec();
  s.synonyms.push_back("bad\"quote");
  EXPECT_EQ(thrown_code([&] { build_query(s); }), ErrorCode::InvalidTerm);
}

TEST(Query, BalancedQuotedOnceAndInjectiveProperty) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> pool{"alpha", "beta", "gamma", "delta", "in vitro",
                                      "x-ray", "tumour", "cell line"};
  std::map<std::string, std::string> query_of_spec;
  for (int trial = 0; trial < 300; ++trial) {
    auto shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    QuerySpec s;
    s.drug = "drug" + std::to_string(trial % 5);
    s.synonyms.assign(shuffled.begin(), shuffled.begin() + trial % 2);
    s.cancer_terms.assign(shuffled.begin() + 2, shuffled.begin() + 3 + trial % 3);
    s.design_terms.assign(shuffled.begin() + 6, shuffled.begin() + 7 + trial % 2);
    const auto q = build_query(s);

    int depth = 0;
    for (char c : q) {
      depth += c == '(' ? 1 : c == ')' ? -1 : 0;
      ASSERT_GE(depth, 0);
    }
    EXPECT_EQ(depth, 0);
    std::vector<std::string> terms{s.drug};
    for (const auto* g : {&s.synonyms, &s.cancer_terms, &s.design_terms}) {
      terms.insert(terms.end(), g->begin(), g->end());
    }
    for (const auto& t : terms) EXPECT_EQ(count_of(q, "\"" + t + "\"[tiab]"), 1u) << q;

    std::string key = s.drug + "|";
    for (const auto* g : {&s.synonyms, &s.cancer_terms, &s.design_terms}) {
      for (const auto& t : *g) key += t + ",";
      key += "|";
    }
    const auto [it, fresh] = query_of_spec.emplace(key, q);
    if (!fresh) {
      EXPECT_EQ(it->second, q);
    }
  }
  std::set<std::string> distinct;
  for (const auto& [spec, q] : query_of_spec) distinct.insert(q);
  EXPECT_EQ(distinct.size(), query_of_spec.size());
}

TEST(Query, FieldTagIsConfigurable) {
  auto s = adapalene_spec();
  s.field_tag = "All Fields";
  EXPECT_NE(build_query(s).find(R"("adapalene"[All Fields])"), std::string::npos);
}

TEST(TermFiles, ParseAndShippedDefaults) {
  EXPECT_EQ(parse_term_list("# header\n  cancer \n\nin vitro\r\n#x\n"),
            (std::vector<std::string>{"cancer", "in vitro"}));
  const auto& cancer = default_cancer_terms();
  for (const char* t : {"cancer", "neoplasm", "neoplasms", "tumor", "tumour", "carcinoma",
                        "malignancy"}) {
    EXPECT_NE(std::find(cancer.begin(), cancer.end(), t), cancer.end()) << t;
  }
  const auto& design = default_design_terms();
  for (const char* t : {"in vitro", "in vivo", "xenograft", "cell line"}) {
    EXPECT_NE(std::find(design.begin(), design.end(), t), design.end()) << t;
  }
  EXPECT_EQ(default_excluded_pub_types(),
            (std::vector<std::string>{"Review", "Editorial", "Comment"}));
  EXPECT_EQ(thrown_code([] { load_term_file("/nonexistent/terms.txt"); }), ErrorCode::Io);
}

TEST(Filter, PhraseMatchingIsTokenBased) {
  EXPECT_TRUE(contains_phrase("Adapalene inhibits growth.", "adapalene"));
  EXPECT_FALSE(contains_phrase("Adapalenes were tested.", "adapalene"));
  EXPECT_TRUE(contains_phrase("treated with all-trans\nretinoic  acid daily", "Retinoic acid"));
  EXPECT_FALSE(contains_phrase("retinoic and acid", "retinoic acid"));
  EXPECT_FALSE(contains_phrase("anything", ""));
}

TEST(Filter, FigureTwoAbstractIsKept) {
  const auto d = shallow_filter(figure_two_record(), "adapalene", {}, FilterRules::defaults());
  EXPECT_EQ(d, (FilterDecision{true, FilterReason::Kept}));
}

TEST(Filter, EmptyAbstractAndMissingCancerTerm) {
  AbstractRecord r;
  r.pmid = 1;
  r.title = "Adapalene and cancer";
  EXPECT_EQ(shallow_filter(r, "adapalene", {}, FilterRules::defaults()),
            (FilterDecision{false, FilterReason::NoAbstract}));

  // Drug present, no term from the cancer list: rule 1 and 2 pass, rule 3 fails.
  r.title = "Adapalene pharmacokinetics";
  r.abstract_text = "Adapalene plasma levels were measured in healthy volunteers.";
  EXPECT_EQ(shallow_filter(r, "adapalene", {}, FilterRules::defaults()),
            (FilterDecision{false, FilterReason::NoCancerTerm}));

  r.abstract_text = "Plasma levels were measured in cancer patients.";
  EXPECT_EQ(shallow_filter(r, "itraconazole", {}, FilterRules::defaults()),
            (FilterDecision{false, FilterReason::DrugNotMentioned}));
  r.publication_types = {"Review"};
  r.abstract_text = "Adapalene in cancer patients.";
  EXPECT_EQ(shallow_filter(r, "adapalene", {}, FilterRules::defaults()),
            (FilterDecision{false, FilterReason::ExcludedPubType}));
}

TEST(Filter, FirstFailingRuleIsReportedProperty) {
  std::mt19937_64 rng(23);
  std::bernoulli_distribution coin(0.5);
  const auto rules = FilterRules::defaults();
  for (int trial = 0; trial < 500; ++trial) {
    const bool has_abstract = coin(rng), has_drug = coin(rng), has_cancer = coin(rng),
               excluded = coin(rng), via_synonym = coin(rng);
    AbstractRecord r;
    r.pmid = static_cast<Pmid>(trial + 1);
    r.title = has_drug && !via_synonym ? "Study of Adapalene" : "A study";
    if (has_abstract) {
      r.abstract_text = std::string(has_drug && via_synonym ? "Differin " : "") +
                        (has_cancer ? "reduced tumour size." : "was well tolerated.");
    }
    if (excluded) r.publication_types = {"Journal Article", "Editorial"};
    const std::vector<std::string> synonyms{"differin"};
    const auto d = shallow_filter(r, "adapalene", synonyms, rules);

    FilterReason expected = FilterReason::Kept;
    if (!has_abstract) expected = FilterReason::NoAbstract;
    else if (!has_drug) expected = FilterReason::DrugNotMentioned;
    else if (!has_cancer) expected = FilterReason::NoCancerTerm;
    else if (excluded) expected = FilterReason::ExcludedPubType;
    EXPECT_EQ(d.reason, expected);
    EXPECT_EQ(d.keep, expected == FilterReason::Kept);
  }
}

TEST(Filter, AddingSynonymsNeverRejectsAKeptRecordProperty) {
  const auto rules = FilterRules::defaults();
  const auto records = load_abstracts(fixture("pipeline/corpus.jsonl"));
  const std::vector<std::vector<std::string>> synonym_sets{
      {}, {"sporanox"}, {"sporanox", "differin"}, {"sporanox", "differin", "cell"}};
  for (const auto& r : records) {
    for (const char* drug : {"adapalene", "metformin", "itraconazole"}) {
      bool kept_before = false;
      for (const auto& syn : synonym_sets) {
        const bool kept = shallow_filter(r, drug, syn, rules).keep;
        if (kept_before) {
          EXPECT_TRUE(kept) << r.pmid << " " << drug;
        }
        kept_before = kept_before || kept;
      }
    }
  }
}
