#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "redrug/text.hpp"
#include "support/helpers.hpp"

using namespace redrug;
using redrug::test::thrown_code;

namespace {

std::vector<std::string> surfaces(std::string_view text) { return tokenize_words(text); }

}  // namespace

TEST(Tokenize, SplitsTrailingPunctuation) {
  EXPECT_EQ(surfaces("Adapalene inhibits growth."),
            (std::vector<std::string>{"Adapalene", "inhibits", "growth", "."}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" \t\n ").empty());
}

TEST(Tokenize, SlashSplitsButHyphenDoesNot) {
  EXPECT_EQ(surfaces("5-FU/cisplatin"), (std::vector<std::string>{"5-FU", "/", "cisplatin"}));
  EXPECT_EQ(surfaces("IC50 of 0.5 uM (p<0.05)."),
            (std::vector<std::string>{"IC50", "of", "0.5", "uM", "(", "p<0.05", ")", "."}));
}

TEST(Tokenize, UnicodeSpaceSeparates) {
  // U+00A0 no-break space between the words.
  EXPECT_EQ(surfaces("liver\xC2\xA0" "cancer"), (std::vector<std::string>{"liver", "cancer"}));
}

TEST(Tokenize, OffsetsReconstructSurfacesProperty) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "ab Z9-./,()\t;:\"'";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 40);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    for (int i = 0, n = len(rng); i < n; ++i) text.push_back(alphabet[pick(rng)]);
    const auto toks = tokenize(text);
    std::size_t prev_end = 0;
    for (const auto& t : toks) {
      ASSERT_LT(t.start, t.end);
      ASSERT_GE(t.start, prev_end);
      ASSERT_EQ(text.substr(t.start, t.end - t.start), t.surface) << text;
      prev_end = t.end;
    }
  }
}

TEST(CaseFold, AsciiOnly) {
  EXPECT_EQ(case_fold("HePaToMa"), "hepatoma");
  EXPECT_EQ(case_fold("\xC3\x89" "A"), "\xC3\x89" "a");
  EXPECT_EQ(normalize_surface("  Breast \t Cancer "), "breast cancer");
}

TEST(Vocab, FrequencyOrderAndMinCount) {
  const std::vector<std::vector<std::string>> docs{{"a", "b", "a"}};
  const auto v = build_vocab(docs, 1);
  EXPECT_EQ(v.terms(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(build_vocab(docs, 2).terms(), std::vector<std::string>{"a"});
  const std::vector<std::vector<std::string>> tie{{"b", "a"}};
  EXPECT_EQ(build_vocab(tie, 1).terms(), (std::vector<std::string>{"a", "b"}));
}

TEST(Vocab, CaseFoldsAndIsBijective) {
  const std::vector<std::vector<std::string>> docs{{"Tumor", "tumor", "TUMOR", "cell"}};
  const auto v = build_vocab(docs, 1);
  ASSERT_EQ(v.size(), 2u);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.find(v.term(i)), i);
  EXPECT_FALSE(v.find("Tumor").has_value());
}

TEST(Vocab, JsonRoundTrip) {
  const std::vector<std::vector<std::string>> docs{{"x", "y", "y", "z", "z", "z"}};
  const auto v = build_vocab(docs, 2);
  const nlohmann::json j = v;
  EXPECT_EQ(j.at("min_count"), 2);
  EXPECT_EQ(j.at("terms"), (nlohmann::json{"z", "y"}));
  EXPECT_EQ(j.get<Vocabulary>(), v);
}

TEST(Bow, CountsAndOov) {
  const Vocabulary v({"a", "b"}, 1);
  const std::vector<std::string> toks{"a", "A", "b"};
  EXPECT_EQ(bow_vector(toks, v).entries(),
            (std::vector<SparseVector::Entry>{{0, 2.0}, {1, 1.0}}));
  const std::vector<std::string> oov{"q", "r"};
  const auto e = bow_vector(oov, v);
  EXPECT_TRUE(e.empty());
  EXPECT_EQ(e.dimension(), 2u);
  EXPECT_TRUE(bow_vector(std::vector<std::string>{}, v).empty());
}

TEST(Bow, L1NormCountsInVocabularyTokensProperty) {
  std::mt19937_64 rng(2);
  const Vocabulary v({"a", "b", "c"}, 1);
  const std::vector<std::string> pool{"a", "b", "c", "d", "E", "B"};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> toks;
    std::size_t in_vocab = 0;
    for (int i = 0; i < trial % 17; ++i) {
      toks.push_back(pool[pick(rng)]);
      if (v.find(case_fold(toks.back()))) ++in_vocab;
    }
    EXPECT_EQ(bow_vector(toks, v).l1_norm(), static_cast<double>(in_vocab));
  }
}

TEST(Concat, FieldOffsets) {
  const SparseVector a(2, {{0, 1.0}});
  const SparseVector d(2, {{1, 1.0}});
  const SparseVector c(2, {{0, 3.0}});
  const auto out = concat_fields(a, d, c);
  EXPECT_EQ(out.dimension(), 6u);
  EXPECT_EQ(out.entries(), (std::vector<SparseVector::Entry>{{0, 1.0}, {3, 1.0}, {4, 3.0}}));
  EXPECT_EQ(out.l1_norm(), a.l1_norm() + d.l1_norm() + c.l1_norm());

  const auto empty = concat_fields(SparseVector(4), SparseVector(4), SparseVector(4));
  EXPECT_TRUE(empty.empty());
  EXPECT_EQ(empty.dimension(), 12u);

  EXPECT_EQ(thrown_code([] { concat_fields(SparseVector(2), SparseVector(3), SparseVector(2)); }),
            ErrorCode::DimensionMismatch);
}

TEST(SparseVector, RejectsBadEntries) {
  EXPECT_TRUE(thrown_code([] { SparseVector(3, {{2, 1.0}, {1, 1.0}}); }).has_value());
  EXPECT_TRUE(thrown_code([] { SparseVector(3, {{3, 1.0}}); }).has_value());
  EXPECT_EQ(SparseVector(3, {{0, 0.0}, {2, 1.5}}).nnz(), 1u);
  const std::vector<double> dense{1.0, 2.0, 3.0};
  EXPECT_EQ(SparseVector(3, {{0, 2.0}, {2, 1.0}}).dot(dense), 5.0);
}
