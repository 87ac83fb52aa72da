#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "redrug/ner.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace redrug;
using redrug::test::fixture;
using redrug::test::thrown_code;

namespace {

std::vector<Token> toks(std::initializer_list<const char*> words) {
  std::vector<Token> out;
  std::size_t pos = 0;
  for (const char* w : words) {
    const std::string s(w);
    out.push_back({s, pos, pos + s.size()});
    pos += s.size() + 1;
  }
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

TaggedSentence sentence(std::initializer_list<const char*> words, std::vector<Tag> tags) {
  return {toks(words), std::move(tags)};
}

// Twenty sentences where "hepatoma" and "melanoma" are always entities.
std::vector<TaggedSentence> toy_entities() {
  using enum Tag;
  std::vector<TaggedSentence> out;
  const char* subjects[] = {"hepatoma", "melanoma"};
  const char* verbs[] = {"cells", "growth", "lines", "models", "samples"};
  for (int i = 0; i < 20; ++i) {
    const char* s = subjects[i % 2];
    const char* v = verbs[i % 5];
    if (i % 3 == 0) {
      out.push_back(sentence({"Human", s, v, "were", "treated"}, {O, BCancer, O, O, O}));
    } else {
      out.push_back(sentence({"The", "drug", "reduced", s, v}, {O, O, O, BCancer, O}));
    }
  }
  return out;
}

}  // namespace

TEST(Features, TemplateExamples) {
  const auto one = toks({"Hepatoma"});
  const auto f = extract_features(one, 0);
  for (const char* x : {"w=hepatoma", "shape=Xx", "suf3=oma", "BOS", "EOS", "iscap"}) {
    EXPECT_TRUE(has(f, x)) << x;
  }
  EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
  EXPECT_TRUE(has(extract_features(toks({"5"}), 0), "isdigit"));
  const auto mid = extract_features(toks({"human", "liver", "tumour"}), 1);
  EXPECT_TRUE(has(mid, "-1:w=human"));
  EXPECT_TRUE(has(mid, "+1:w=tumour"));
  EXPECT_FALSE(has(mid, "BOS"));
  EXPECT_FALSE(has(mid, "EOS"));
}

TEST(Features, WordShapes) {
  EXPECT_EQ(word_shape("Hepatoma"), "Xx");
  EXPECT_EQ(word_shape("5-FU"), "d-X");
  EXPECT_EQ(word_shape("p53"), "xd");
  EXPECT_EQ(word_shape("1995"), "d");
}

TEST(Crf, ZeroModelPartitionAndDecode) {
  CrfModel m(FeatureDictionary({"w=hepatoma"}));
  const auto one = toks({"x"});
  EXPECT_NEAR(forward_log_partition(m, one), std::log(3.0), 1e-12);
  const auto three = toks({"a", "b", "c"});
  EXPECT_NEAR(forward_log_partition(m, three), 3.0 * std::log(3.0), 1e-12);
  EXPECT_EQ(viterbi_decode(m, three), (std::vector<Tag>{Tag::O, Tag::O, Tag::O}));
  EXPECT_EQ(thrown_code([&] { forward_log_partition(m, {}); }), ErrorCode::EmptySentence);
  EXPECT_EQ(thrown_code([&] { viterbi_decode(m, {}); }), ErrorCode::EmptySentence);
}

TEST(Crf, HandcraftedEmissionFavoursEntity) {
  CrfModel m(FeatureDictionary({"w=hepatoma"}));
  m.weights.emission(0, Tag::BCancer) = 2.0;
  const auto s = toks({"human", "hepatoma", "cells"});
  const std::vector<Tag> expected{Tag::O, Tag::BCancer, Tag::O};
  EXPECT_EQ(viterbi_decode(m, s), expected);
  const auto bf = oracle::brute_force(m, s);
  EXPECT_EQ(bf.argmax, expected);
}

TEST(Crf, TwoTokenHandcraftedMatchesEnumeration) {
  CrfModel m(FeatureDictionary({"w=a", "w=b", "bias"}));
  auto& w = m.weights;
  w.emission(0, Tag::BCancer) = 0.3;
  w.emission(1, Tag::ICancer) = -0.2;
  w.emission(2, Tag::O) = 0.1;
  w.transition(Tag::BCancer, Tag::ICancer) = 0.7;
  w.transition(Tag::O, Tag::ICancer) = -1.1;
  w.start(Tag::BCancer) = 0.05;
  w.end(Tag::O) = -0.4;
  const auto s = toks({"a", "b"});
  double sum = 0.0;
  oracle::for_each_tag_sequence(2, [&](const std::vector<Tag>& tags) {
    sum += std::exp(oracle::reference_score(m, s, tags));
  });
  EXPECT_NEAR(forward_log_partition(m, s), std::log(sum), 1e-12);
}

TEST(Crf, RandomModelsMatchBruteForce) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = oracle::random_crf(rng, 0.8);
    const auto s = oracle::random_sentence(rng, 1 + trial % 4);
    const auto bf = oracle::brute_force(m, s);
    const double log_z = forward_log_partition(m, s);
    EXPECT_NEAR(std::exp(log_z - bf.log_z), 1.0, 1e-9);
    EXPECT_EQ(viterbi_decode(m, s), bf.argmax);

    // log Z bounds every sequence score.
    oracle::for_each_tag_sequence(s.size(), [&](const std::vector<Tag>& tags) {
      EXPECT_LE(sequence_score(m, s, tags), log_z + 1e-12);
      EXPECT_NEAR(sequence_score(m, s, tags), oracle::reference_score(m, s, tags), 1e-12);
    });

    const auto marg = tag_marginals(m, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double total = 0.0;
      for (std::size_t t = 0; t < kNumTags; ++t) {
        total += marg[i][t];
        EXPECT_NEAR(marg[i][t], bf.marginals[i][t], 1e-9);
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Crf, ViterbiTieBreaksToLowestTag) {
  // B and I score identically at position 1, above O.
  CrfModel m(FeatureDictionary({"w=x"}));
  m.weights.emission(0, Tag::BCancer) = 1.0;
  m.weights.emission(0, Tag::ICancer) = 1.0;
  const auto s = toks({"x"});
  EXPECT_EQ(viterbi_decode(m, s), std::vector<Tag>{Tag::BCancer});
}

TEST(Crf, ArgmaxInvariantUnderPerPositionShiftProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = oracle::random_crf(rng, 1.0);
    const auto s = oracle::random_sentence(rng, 1 + trial % 4);
    const auto before = viterbi_decode(m, s);
    const double z_before = forward_log_partition(m, s);
    // "bias" fires at every position; shifting it uniformly over tags adds
    // the same constant to every tag at every position.
    const auto bias = m.features.find("bias");
    ASSERT_TRUE(bias.has_value());
    for (Tag t : {Tag::O, Tag::BCancer, Tag::ICancer}) m.weights.emission(*bias, t) += 2.5;
    EXPECT_EQ(viterbi_decode(m, s), before);
    EXPECT_NEAR(forward_log_partition(m, s), z_before + 2.5 * static_cast<double>(s.size()),
                1e-9);
  }
}

TEST(CrfObjective, AnalyticValuesAndL2Term) {
  CrfModel m(FeatureDictionary::build(std::vector<TaggedSentence>{sentence({"x"}, {Tag::O})}));
  const std::vector<TaggedSentence> batch{sentence({"x"}, {Tag::O})};
  EXPECT_NEAR(crf_neg_log_likelihood_and_grad(m, batch, 0.0).value, std::log(3.0), 1e-12);

  // With uniform posteriors and l2, the gradient of emission (f, t) is
  // 1/3 - [t == O] + l2 * w.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double l2 = 0.7;
  CrfModel pert = m;
  const auto zero_grad = crf_neg_log_likelihood_and_grad(m, batch, 0.0).gradient;
  for (double& w : pert.weights.values()) w = normal(rng);
  const auto with = crf_neg_log_likelihood_and_grad(pert, batch, l2).gradient;
  const auto without = crf_neg_log_likelihood_and_grad(pert, batch, 0.0).gradient;
  for (std::size_t i = 0; i < pert.weights.size(); ++i) {
    EXPECT_NEAR(with.values()[i] - without.values()[i], l2 * pert.weights.values()[i], 1e-12);
  }
  EXPECT_NEAR(zero_grad.emission(0, Tag::O), 1.0 / 3.0 - 1.0, 1e-12);
  EXPECT_NEAR(zero_grad.emission(0, Tag::BCancer), 1.0 / 3.0, 1e-12);
}

TEST(CrfObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = oracle::random_crf(rng, 0.5);
    std::vector<TaggedSentence> batch;
    for (int b = 0; b < 2; ++b) {
      const std::size_t n = 1 + (trial + b) % 3;
      batch.push_back({oracle::random_sentence(rng, n), oracle::random_tags(rng, n)});
    }
    const double l2 = 0.1;
    const auto analytic = crf_neg_log_likelihood_and_grad(m, batch, l2);
    std::vector<double> params(m.weights.values().begin(), m.weights.values().end());
    const auto numeric = oracle::central_differences(params, [&] {
      std::copy(params.begin(), params.end(), m.weights.values().begin());
      return crf_neg_log_likelihood_and_grad(m, batch, l2).value;
    });
    const std::vector<double> a(analytic.gradient.values().begin(),
                                analytic.gradient.values().end());
    EXPECT_LE(oracle::max_relative_error(a, numeric), 1e-4);
  }
  CrfModel m;
  EXPECT_EQ(thrown_code([&] {
              crf_neg_log_likelihood_and_grad(m, std::vector<TaggedSentence>{{}}, 0.0);
            }),
            ErrorCode::EmptySentence);
}

TEST(CrfTraining, LearnsToyEntities) {
  const auto data = toy_entities();
  std::vector<double> losses;
  CrfTrainParams p;
  p.epochs = 40;
  p.on_epoch = [&](int, double loss) { losses.push_back(loss); };
  const auto m = train_crf(data, p);
  for (const auto& s : data) EXPECT_EQ(viterbi_decode(m, s.tokens), s.tags);
  ASSERT_EQ(losses.size(), 40u);
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1] + 1e-12);
}

TEST(CrfTraining, ZeroEpochsAndDeterminism) {
  const auto data = toy_entities();
  CrfTrainParams p;
  p.epochs = 0;
  const auto zero = train_crf(data, p);
  EXPECT_TRUE(std::all_of(zero.weights.values().begin(), zero.weights.values().end(),
                          [](double w) { return w == 0.0; }));
  EXPECT_GT(zero.features.size(), 0u);
  p.epochs = 5;
  p.seed = 9;
  EXPECT_EQ(train_crf(data, p).weights, train_crf(data, p).weights);
}

TEST(CrfModelIo, RoundTripIsExactAndVersionChecked) {
  std::mt19937_64 rng(13);
  const auto m = oracle::random_crf(rng, 1.0);
  const auto dir = redrug::test::scratch_dir("crf_io");
  save_crf_model(dir / "m.json", m);
  const auto back = load_crf_model(dir / "m.json");
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.features.names(), m.features.names());
  EXPECT_EQ(back.feature_template_version, kCrfTemplateVersion);

  auto j = crf_model_to_json(m);
  j["format_version"] = 99;
  EXPECT_EQ(thrown_code([&] { crf_model_from_json(j); }), ErrorCode::UnsupportedVersion);
}

TEST(Entities, DecodeExamples) {
  using enum Tag;
  const auto t3 = toks({"breast", "cancer", "cells"});
  const std::vector<Tag> bio{BCancer, ICancer, O};
  EXPECT_EQ(decode_entities(t3, bio), (std::vector<EntitySpan>{{0, 2, "breast cancer"}}));
  const auto t2 = toks({"a", "melanoma"});
  const std::vector<Tag> oi{O, ICancer};
  EXPECT_EQ(decode_entities(t2, oi), (std::vector<EntitySpan>{{1, 2, "melanoma"}}));
  EXPECT_TRUE(decode_entities(t3, std::vector<Tag>{O, O, O}).empty());
  // B directly after B starts a new span.
  EXPECT_EQ(decode_entities(t3, std::vector<Tag>{BCancer, BCancer, ICancer}).size(), 2u);
}

TEST(Entities, TagsFromSpansInvertsDecodeProperty) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 7;
    auto tags = oracle::random_tags(rng, n);
    // Repair into an IOB-valid sequence.
    for (std::size_t i = 0; i < n; ++i) {
      if (tags[i] == Tag::ICancer && (i == 0 || tags[i - 1] == Tag::O)) tags[i] = Tag::BCancer;
    }
    ASSERT_TRUE(is_iob_valid(tags));
    const auto s = oracle::random_sentence(rng, n);
    const auto spans = decode_entities(s, tags);
    EXPECT_EQ(tags_from_spans(n, spans), tags);
  }
}

TEST(Metrics, EntityRecall) {
  const std::vector<std::string> ab{"a", "b"}, ac{"a", "c"}, none{}, x{"x"};
  EXPECT_EQ(entity_recall(ab, ab), 1.0);
  EXPECT_EQ(entity_recall(ab, ac), 0.5);
  EXPECT_EQ(entity_recall(none, x), 1.0);
  const std::vector<std::string> gold{"Breast  Cancer", "breast cancer", "Melanoma"};
  const std::vector<std::string> pred{"breast cancer"};
  EXPECT_EQ(entity_recall(gold, pred), 0.5);
}

TEST(Metrics, OverlapScore) {
  const std::vector<EntitySpan> gold{{2, 5, ""}};
  const std::vector<EntitySpan> pred{{3, 6, ""}, {0, 1, ""}};
  EXPECT_EQ(overlap_score(gold, pred), 0.5);
  EXPECT_EQ(overlap_score(gold, gold), 1.0);
  EXPECT_EQ(overlap_score(gold, {}), 0.0);
  EXPECT_EQ(overlap_score({}, pred), 1.0);
}

TEST(Metrics, OverlapAtLeastExactMatchProperty) {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<std::size_t> pos(0, 9), len(1, 3), count(0, 3);
  auto random_spans = [&] {
    std::vector<EntitySpan> out;
    for (std::size_t i = 0, n = count(rng); i < n; ++i) {
      const auto b = pos(rng);
      out.push_back({b, b + len(rng), ""});
    }
    return out;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto gold = random_spans();
    const auto pred = random_spans();
    if (gold.empty()) continue;
    EXPECT_GE(overlap_score(gold, pred) + 1e-12, exact_match_rate(gold, pred));
  }
}

TEST(Sentences, SplitOnTerminalPunctuationBeforeCapital) {
  const auto parts = split_sentences("Cells grew. Tumours shrank in 5 mice. ratio 0.5 held");
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].back().surface, ".");
  EXPECT_EQ(parts[1].front().surface, "Tumours");
  EXPECT_EQ(parts[1].back().surface, "held");
}

TEST(NerEndToEnd, FixtureModelFindsSpecificCancerTypes) {
  const auto data = load_ner_dataset(fixture("ner_train.conll"));
  const auto m = train_crf(data, CrfTrainParams{});
  const auto metrics = evaluate_ner(m, data);
  EXPECT_GT(metrics.recall, 0.9);
  EXPECT_GT(metrics.overlap, 0.9);
  EXPECT_GT(metrics.gold_spans, 0u);
  const auto mentions = extract_cancer_mentions(
      m, "Adapalene inhibited proliferation of hepatoma cells. Melanoma was not affected.");
  EXPECT_NE(std::find(mentions.begin(), mentions.end(), "hepatoma"), mentions.end());
}
