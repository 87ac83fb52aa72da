#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "redrug/eval.hpp"
#include "redrug/studytype.hpp"
#include "support/helpers.hpp"

using namespace redrug;
using redrug::test::fixture;
using redrug::test::thrown_code;

namespace {

struct StudyFixture {
  std::vector<StudyTypeExample> examples;
  std::vector<AbstractRecord> abstracts;
  AbstractIndex index;
};

const StudyFixture& study_fixture() {
  static const StudyFixture f = [] {
    StudyFixture out;
    out.examples = load_studytype_dataset(fixture("study_separable.jsonl"));
    out.abstracts = load_abstracts(fixture("study_abstracts.jsonl"));
    out.index = index_by_pmid(out.abstracts);
    return out;
  }();
  return f;
}

std::vector<const AbstractRecord*> pointers(const std::vector<AbstractRecord>& records) {
  std::vector<const AbstractRecord*> out;
  for (const auto& r : records) out.push_back(&r);
  return out;
}

}  // namespace

TEST(StudyFeatures, PublicationTypeOneHot) {
  AbstractRecord r;
  r.publication_types = {"Clinical Trial"};
  const Vocabulary pt({"Clinical Trial", "Review"}, 1);
  const auto v = study_features(r, StudyFeatureMode::PT, Vocabulary{}, pt, Vocabulary{});
  EXPECT_EQ(v.dimension(), 2u);
  EXPECT_EQ(v.entries(), (std::vector<SparseVector::Entry>{{0, 1.0}}));
  r.publication_types.push_back("Unknown Type");
  EXPECT_EQ(study_features(r, StudyFeatureMode::PT, Vocabulary{}, pt, Vocabulary{}), v);
}

TEST(StudyFeatures, AllModeOffsetsAndEmptyMesh) {
  AbstractRecord r;
  r.title = "beta gamma";
  r.abstract_text = "gamma epsilon";
  r.publication_types = {"Review"};
  r.mesh_terms = {"Mice", "Humans"};
  const Vocabulary pt({"Clinical Trial", "Review"}, 1);
  const Vocabulary vocab({"alpha", "beta", "gamma", "delta", "epsilon"}, 1);
  const Vocabulary mesh({"Humans", "Mice", "Rats"}, 1);
  const auto all = study_features(r, StudyFeatureMode::All, vocab, pt, mesh);
  EXPECT_EQ(all.dimension(), 10u);
  EXPECT_EQ(all.entries(), (std::vector<SparseVector::Entry>{
                               {1, 1.0}, {3, 1.0}, {4, 2.0}, {6, 1.0}, {7, 1.0}, {8, 1.0}}));

  AbstractRecord bare;
  const auto m = study_features(bare, StudyFeatureMode::MeSH, vocab, pt, mesh);
  EXPECT_TRUE(m.empty());
  EXPECT_EQ(m.dimension(), 3u);
}

TEST(StudyFeatures, BlockConsistencyAndOrderIndependenceProperty) {
  const auto& fx = study_fixture();
  auto ptrs = pointers(fx.abstracts);
  const auto space = build_study_feature_space(ptrs, StudyFeatureMode::All, 1);
  std::mt19937_64 rng(4);
  auto shuffled = ptrs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto space2 = build_study_feature_space(shuffled, StudyFeatureMode::All, 1);
  EXPECT_EQ(space.vocab, space2.vocab);
  EXPECT_EQ(space.pt_index, space2.pt_index);
  EXPECT_EQ(space.mesh_index, space2.mesh_index);

  const std::size_t p = space.pt_index.size(), b = space.vocab.size();
  for (const auto& r : fx.abstracts) {
    const auto all = study_features(r, space);
    const auto pt = study_features(r, StudyFeatureMode::PT, space.vocab, space.pt_index, space.mesh_index);
    const auto bow = study_features(r, StudyFeatureMode::BoW, space.vocab, space.pt_index, space.mesh_index);
    const auto mesh = study_features(r, StudyFeatureMode::MeSH, space.vocab, space.pt_index, space.mesh_index);
    std::vector<SparseVector::Entry> pt_part, bow_part, mesh_part;
    for (auto [i, v] : all.entries()) {
      if (i < p) pt_part.push_back({i, v});
      else if (i < p + b) bow_part.push_back({i - p, v});
      else mesh_part.push_back({i - p - b, v});
    }
    EXPECT_EQ(pt_part, pt.entries());
    EXPECT_EQ(bow_part, bow.entries());
    EXPECT_EQ(mesh_part, mesh.entries());
  }
}

TEST(StudyType, PublicationTypeAloneReachesFullTrainingAccuracy) {
  std::vector<AbstractRecord> records;
  std::vector<StudyTypeExample> examples;
  const char* pts[] = {"In Vitro", "Observational Study", "Randomized Controlled Trial", "News"};
  for (Pmid p = 1; p <= 40; ++p) {
    AbstractRecord r;
    r.pmid = p;
    r.title = "Shared title words";
    r.abstract_text = "Identical body text for every record.";
    r.publication_types = {"Journal Article", pts[p % 4]};
    records.push_back(r);
    examples.push_back({p, kStudyTypeLabels[p % 4]});
  }
  StudyTrainParams params;
  params.mode = StudyFeatureMode::PT;
  const auto index = index_by_pmid(records);
  const auto m = train_studytype(examples, index, params);
  EXPECT_EQ(m.space.vocab.size(), 0u);
  for (const auto& ex : examples) {
    EXPECT_EQ(predict_studytype(m, index.at(ex.pmid)).label, ex.label);
  }
}

TEST(StudyType, AllModeIsAtLeastTheBestSingleMode) {
  const auto& fx = study_fixture();
  double best_single = 0.0, all = 0.0;
  for (auto mode : {StudyFeatureMode::PT, StudyFeatureMode::BoW, StudyFeatureMode::MeSH,
                    StudyFeatureMode::All}) {
    StudyTrainParams p;
    p.mode = mode;
    const double f1 = cross_validate_studytype(fx.examples, fx.index, p, 5, 7).mean.macro_f1;
    if (mode == StudyFeatureMode::All) all = f1;
    else best_single = std::max(best_single, f1);
  }
  EXPECT_GE(all, best_single);
}

TEST(StudyType, FigureTwoRecordIsPreclinical) {
  const auto& fx = study_fixture();
  const auto m = train_studytype(fx.examples, fx.index, StudyTrainParams{});
  const auto corpus = index_by_pmid(load_abstracts(fixture("pipeline/corpus.jsonl")));
  const auto pred = predict_studytype(m, corpus.at(15105045));
  EXPECT_EQ(pred.label, StudyTypeLabel::Preclinical);
  EXPECT_EQ(pred.scores.size(), 4u);
}

TEST(StudyType, ModelRoundTripAndModes) {
  const auto& fx = study_fixture();
  StudyTrainParams p;
  p.logreg.epochs = 3;
  const auto m = train_studytype(fx.examples, fx.index, p);
  const auto dir = redrug::test::scratch_dir("study_io");
  save_studytype_model(dir / "s.json", m);
  const auto back = load_studytype_model(dir / "s.json");
  EXPECT_EQ(back.space.pt_index, m.space.pt_index);
  EXPECT_EQ(back.space.mesh_index, m.space.mesh_index);
  for (const auto& r : fx.abstracts) {
    EXPECT_EQ(predict_studytype(back, r).scores, predict_studytype(m, r).scores);
  }
  EXPECT_EQ(parse_study_feature_mode("ALL"), StudyFeatureMode::All);
  EXPECT_EQ(parse_study_feature_mode("mesh"), StudyFeatureMode::MeSH);
  EXPECT_TRUE(thrown_code([] { parse_study_feature_mode("tfidf"); }).has_value());
}
