#include "redrug/ner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "log_math.hpp"
#include "redrug/error.hpp"

namespace redrug {

using nlohmann::json;

namespace {

constexpr std::array<Tag, kNumTags> kTags = {Tag::O, Tag::BCancer, Tag::ICancer};

std::size_t ti(Tag t) { return static_cast<std::size_t>(t); }

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

void word_attributes(std::string_view word, std::string_view prefix,
                     std::vector<std::string>& out) {
  const std::string lower = case_fold(word);
  const std::string p(prefix);
  out.push_back(p + "w=" + lower);
  out.push_back(p + "shape=" + word_shape(word));
  for (std::size_t k = 1; k <= 3 && k <= lower.size(); ++k) {
    out.push_back(p + "pre" + std::to_string(k) + "=" + lower.substr(0, k));
    out.push_back(p + "suf" + std::to_string(k) + "=" +
                  lower.substr(lower.size() - k));
  }
  if (!word.empty() && std::all_of(word.begin(), word.end(), is_digit)) {
    out.push_back(p + "isdigit");
  }
  if (!word.empty() && is_upper(word.front())) out.push_back(p + "iscap");
}

using Lattice = std::vector<std::array<double, kNumTags>>;

struct ForwardBackward {
  Lattice alpha;
  Lattice beta;
  double log_z = 0.0;
};

void require_nonempty(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptySentence, "sentence has no tokens");
}

ForwardBackward forward_backward(const CrfWeights& w, const Lattice& emit,
                                 bool with_beta) {
  const std::size_t n = emit.size();
  require_nonempty(n);
  ForwardBackward fb;
  fb.alpha.resize(n);
  for (Tag t : kTags) fb.alpha[0][ti(t)] = w.start(t) + emit[0][ti(t)];
  std::array<double, kNumTags> terms{};
  for (std::size_t i = 1; i < n; ++i) {
    for (Tag to : kTags) {
      for (Tag from : kTags) {
        terms[ti(from)] = fb.alpha[i - 1][ti(from)] + w.transition(from, to);
      }
      fb.alpha[i][ti(to)] = detail::log_sum_exp(terms) + emit[i][ti(to)];
    }
  }
  for (Tag t : kTags) terms[ti(t)] = fb.alpha[n - 1][ti(t)] + w.end(t);
  fb.log_z = detail::log_sum_exp(terms);

  if (with_beta) {
    fb.beta.resize(n);
    for (Tag t : kTags) fb.beta[n - 1][ti(t)] = w.end(t);
    for (std::size_t i = n - 1; i-- > 0;) {
      for (Tag from : kTags) {
        for (Tag to : kTags) {
          terms[ti(to)] = w.transition(from, to) + emit[i + 1][ti(to)] +
                          fb.beta[i + 1][ti(to)];
        }
        fb.beta[i][ti(from)] = detail::log_sum_exp(terms);
      }
    }
  }
  return fb;
}

// Feature ids of a sentence resolved against the model dictionary.
using CompiledSentence = std::vector<std::vector<std::size_t>>;

CompiledSentence compile(const FeatureDictionary& dict,
                         std::span<const Token> tokens) {
  CompiledSentence out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& f : extract_features(tokens, i)) {
      if (auto id = dict.find(f)) out[i].push_back(*id);
    }
  }
  return out;
}

Lattice emissions(const CrfWeights& w, const CompiledSentence& feats) {
  Lattice out(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    out[i].fill(0.0);
    for (std::size_t f : feats[i]) {
      for (Tag t : kTags) out[i][ti(t)] += w.emission(f, t);
    }
  }
  return out;
}

double gold_score(const CrfWeights& w, const Lattice& emit,
                  std::span<const Tag> tags) {
  const std::size_t n = tags.size();
  double s = w.start(tags[0]) + w.end(tags[n - 1]);
  for (std::size_t i = 0; i < n; ++i) {
    s += emit[i][ti(tags[i])];
    if (i > 0) s += w.transition(tags[i - 1], tags[i]);
  }
  return s;
}

// Adds (expected - observed) counts of one sentence into `grad` and returns
// its negative log-likelihood.
double accumulate_sentence(const CrfWeights& w, const CompiledSentence& feats,
                           std::span<const Tag> gold, CrfWeights& grad) {
  const std::size_t n = feats.size();
  require_nonempty(n);
  if (gold.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "tags and tokens differ in length");
  }
  const Lattice emit = emissions(w, feats);
  const ForwardBackward fb = forward_backward(w, emit, true);

  for (std::size_t i = 0; i < n; ++i) {
    for (Tag t : kTags) {
      const double p = std::exp(fb.alpha[i][ti(t)] + fb.beta[i][ti(t)] - fb.log_z);
      const double delta = p - (gold[i] == t ? 1.0 : 0.0);
      for (std::size_t f : feats[i]) grad.emission(f, t) += delta;
      if (i == 0) grad.start(t) += delta;
      if (i == n - 1) grad.end(t) += delta;
    }
    if (i == 0) continue;
    for (Tag from : kTags) {
      for (Tag to : kTags) {
        const double p = std::exp(fb.alpha[i - 1][ti(from)] + w.transition(from, to) +
                                  emit[i][ti(to)] + fb.beta[i][ti(to)] - fb.log_z);
        grad.transition(from, to) += p;
      }
    }
    grad.transition(gold[i - 1], gold[i]) -= 1.0;
  }
  return fb.log_z - gold_score(w, emit, gold);
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

std::string word_shape(std::string_view word) {
  std::string out;
  for (char c : word) {
    char cls = c;
    if (is_upper(c)) {
      cls = 'X';
    } else if (is_lower(c)) {
      cls = 'x';
    } else if (is_digit(c)) {
      cls = 'd';
    }
    if (out.empty() || out.back() != cls) out.push_back(cls);
  }
  return out;
}

std::vector<std::string> extract_features(std::span<const Token> tokens,
                                          std::size_t position) {
  if (position >= tokens.size()) {
    throw Error(ErrorCode::InvalidArgument, "feature position out of range");
  }
  std::vector<std::string> out;
  out.emplace_back("bias");
  word_attributes(tokens[position].surface, "", out);
  if (position == 0) {
    out.emplace_back("BOS");
  } else {
    word_attributes(tokens[position - 1].surface, "-1:", out);
  }
  if (position + 1 == tokens.size()) {
    out.emplace_back("EOS");
  } else {
    word_attributes(tokens[position + 1].surface, "+1:", out);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FeatureDictionary::FeatureDictionary(std::vector<std::string> features)
    : names_(std::move(features)) {
  index_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw Error(ErrorCode::DuplicateKey, "duplicate feature " + names_[i]);
    }
  }
}

FeatureDictionary FeatureDictionary::build(std::span<const TaggedSentence> sentences) {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      for (auto& f : extract_features(s.tokens, i)) {
        if (seen.emplace(f, names.size()).second) names.push_back(std::move(f));
      }
    }
  }
  return FeatureDictionary(std::move(names));
}

std::optional<std::size_t> FeatureDictionary::find(const std::string& feature) const {
  auto it = index_.find(feature);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CrfWeights::CrfWeights(std::size_t num_features)
    : num_features_(num_features),
      values_(num_features * kNumTags + kNumTags * kNumTags + 2 * kNumTags, 0.0) {}

// ---------------------------------------------------------------------------
// Inference

std::vector<std::array<double, kNumTags>> emission_scores(
    const CrfModel& model, std::span<const Token> tokens) {
  return emissions(model.weights, compile(model.features, tokens));
}

double sequence_score(const CrfModel& model, std::span<const Token> tokens,
                      std::span<const Tag> tags) {
  require_nonempty(tokens.size());
  if (tags.size() != tokens.size()) {
    throw Error(ErrorCode::DimensionMismatch, "tags and tokens differ in length");
  }
  return gold_score(model.weights, emission_scores(model, tokens), tags);
}

double forward_log_partition(const CrfModel& model, std::span<const Token> tokens) {
  require_nonempty(tokens.size());
  return forward_backward(model.weights, emission_scores(model, tokens), false).log_z;
}

std::vector<std::array<double, kNumTags>> tag_marginals(
    const CrfModel& model, std::span<const Token> tokens) {
  require_nonempty(tokens.size());
  const auto fb =
      forward_backward(model.weights, emission_scores(model, tokens), true);
  Lattice out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (Tag t : kTags) {
      out[i][ti(t)] = std::exp(fb.alpha[i][ti(t)] + fb.beta[i][ti(t)] - fb.log_z);
    }
  }
  return out;
}

std::vector<Tag> viterbi_decode(const CrfModel& model, std::span<const Token> tokens) {
  const std::size_t n = tokens.size();
  require_nonempty(n);
  const CrfWeights& w = model.weights;
  const Lattice emit = emission_scores(model, tokens);

  Lattice delta(n);
  std::vector<std::array<std::size_t, kNumTags>> back(n);
  for (Tag t : kTags) delta[0][ti(t)] = w.start(t) + emit[0][ti(t)];
  for (std::size_t i = 1; i < n; ++i) {
    for (Tag to : kTags) {
      std::size_t best = 0;
      double best_score = delta[i - 1][0] + w.transition(Tag::O, to);
      for (Tag from : {Tag::BCancer, Tag::ICancer}) {
        const double s = delta[i - 1][ti(from)] + w.transition(from, to);
        if (s > best_score) {
          best_score = s;
          best = ti(from);
        }
      }
      delta[i][ti(to)] = best_score + emit[i][ti(to)];
      back[i][ti(to)] = best;
    }
  }
  std::size_t last = 0;
  double best_final = delta[n - 1][0] + w.end(Tag::O);
  for (Tag t : {Tag::BCancer, Tag::ICancer}) {
    const double s = delta[n - 1][ti(t)] + w.end(t);
    if (s > best_final) {
      best_final = s;
      last = ti(t);
    }
  }
  std::vector<Tag> path(n);
  path[n - 1] = static_cast<Tag>(last);
  for (std::size_t i = n - 1; i > 0; --i) {
    last = back[i][last];
    path[i - 1] = static_cast<Tag>(last);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Training

CrfObjective crf_neg_log_likelihood_and_grad(const CrfModel& model,
                                             std::span<const TaggedSentence> batch,
                                             double l2) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  if (l2 < 0.0) throw Error(ErrorCode::InvalidArgument, "l2 must be >= 0");
  CrfObjective obj{0.0, CrfWeights(model.weights.num_features())};
  for (const auto& s : batch) {
    require_nonempty(s.tokens.size());
    obj.value += accumulate_sentence(model.weights, compile(model.features, s.tokens),
                                     s.tags, obj.gradient);
  }
  const auto w = model.weights.values();
  auto g = obj.gradient.values();
  obj.value += 0.5 * l2 * squared_norm(w);
  for (std::size_t k = 0; k < w.size(); ++k) g[k] += l2 * w[k];
  return obj;
}

CrfModel train_crf(std::span<const TaggedSentence> dataset,
                   const CrfTrainParams& params) {
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "empty NER dataset");
  if (params.batch_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  }
  for (const auto& s : dataset) {
    require_nonempty(s.tokens.size());
    if (s.tags.size() != s.tokens.size() || !is_iob_valid(s.tags)) {
      throw Error(ErrorCode::InvalidArgument, "training sentence is not IOB-valid");
    }
  }

  CrfModel model(FeatureDictionary::build(dataset));
  std::vector<CompiledSentence> compiled;
  compiled.reserve(dataset.size());
  for (const auto& s : dataset) compiled.push_back(compile(model.features, s.tokens));

  const double n = static_cast<double>(dataset.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed);
  CrfWeights grad(model.features.size());

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += params.batch_size) {
      const std::size_t e = std::min(order.size(), b + params.batch_size);
      std::fill(grad.values().begin(), grad.values().end(), 0.0);
      for (std::size_t k = b; k < e; ++k) {
        accumulate_sentence(model.weights, compiled[order[k]],
                            dataset[order[k]].tags, grad);
      }
      // The batch carries |B|/N of the regularizer; step on the mean.
      const double size = static_cast<double>(e - b);
      auto w = model.weights.values();
      const auto g = grad.values();
      for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] -= params.learning_rate * (g[k] / size + params.l2 * w[k] / n);
      }
    }
    if (params.on_epoch) {
      double loss = 0.5 * params.l2 * squared_norm(model.weights.values());
      for (std::size_t k = 0; k < compiled.size(); ++k) {
        const Lattice emit = emissions(model.weights, compiled[k]);
        loss += forward_backward(model.weights, emit, false).log_z -
                gold_score(model.weights, emit, dataset[k].tags);
      }
      params.on_epoch(epoch, loss / n);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Entities

namespace {

std::string join_surface(std::span<const Token> tokens, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b && tokens[i].start != tokens[i - 1].end) out.push_back(' ');
    out += tokens[i].surface;
  }
  return out;
}

}  // namespace

std::vector<EntitySpan> decode_entities(std::span<const Token> tokens,
                                        std::span<const Tag> tags) {
  if (tokens.size() != tags.size()) {
    throw Error(ErrorCode::DimensionMismatch, "tags and tokens differ in length");
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<EntitySpan> spans;
  std::size_t open = kNone;
  auto close = [&](std::size_t end) {
    if (open != kNone) spans.push_back({open, end, join_surface(tokens, open, end)});
    open = kNone;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    switch (tags[i]) {
      case Tag::O:
        close(i);
        break;
      case Tag::BCancer:
        close(i);
        open = i;
        break;
      case Tag::ICancer:
        if (open == kNone) open = i;
        break;
    }
  }
  close(tags.size());
  return spans;
}

std::vector<Tag> tags_from_spans(std::size_t length, std::span<const EntitySpan> spans) {
  std::vector<Tag> tags(length, Tag::O);
  for (const auto& s : spans) {
    if (s.begin >= s.end || s.end > length) {
      throw Error(ErrorCode::InvalidArgument, "span out of range");
    }
    tags[s.begin] = Tag::BCancer;
    for (std::size_t i = s.begin + 1; i < s.end; ++i) tags[i] = Tag::ICancer;
  }
  return tags;
}

double entity_recall(std::span<const std::string> gold,
                     std::span<const std::string> pred) {
  std::set<std::string> g, p;
  for (const auto& s : gold) g.insert(normalize_surface(s));
  for (const auto& s : pred) p.insert(normalize_surface(s));
  if (g.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& s : g) hit += p.count(s);
  return static_cast<double>(hit) / static_cast<double>(g.size());
}

namespace {

double jaccard(const EntitySpan& a, const EntitySpan& b) {
  const std::size_t lo = std::max(a.begin, b.begin);
  const std::size_t hi = std::min(a.end, b.end);
  const std::size_t inter = hi > lo ? hi - lo : 0;
  const std::size_t uni = a.length() + b.length() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double best_overlap(const EntitySpan& g, std::span<const EntitySpan> pred) {
  double best = 0.0;
  for (const auto& p : pred) best = std::max(best, jaccard(g, p));
  return best;
}

}  // namespace

double overlap_score(std::span<const EntitySpan> gold,
                     std::span<const EntitySpan> pred) {
  if (gold.empty()) return 1.0;
  double total = 0.0;
  for (const auto& g : gold) total += best_overlap(g, pred);
  return total / static_cast<double>(gold.size());
}

double exact_match_rate(std::span<const EntitySpan> gold,
                        std::span<const EntitySpan> pred) {
  if (gold.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& g : gold) {
    hit += std::any_of(pred.begin(), pred.end(), [&](const EntitySpan& p) {
      return p.begin == g.begin && p.end == g.end;
    });
  }
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

NerMetrics evaluate_ner(const CrfModel& model,
                        std::span<const TaggedSentence> sentences) {
  std::vector<std::string> gold_surfaces, pred_surfaces;
  double overlap_total = 0.0;
  std::size_t gold_spans = 0;
  for (const auto& s : sentences) {
    if (s.tokens.empty()) continue;
    const auto gold = decode_entities(s.tokens, s.tags);
    const auto pred = decode_entities(s.tokens, viterbi_decode(model, s.tokens));
    for (const auto& g : gold) {
      gold_surfaces.push_back(g.surface);
      overlap_total += best_overlap(g, pred);
    }
    for (const auto& p : pred) pred_surfaces.push_back(p.surface);
    gold_spans += gold.size();
  }
  NerMetrics m;
  m.recall = entity_recall(gold_surfaces, pred_surfaces);
  m.overlap = gold_spans == 0 ? 1.0 : overlap_total / static_cast<double>(gold_spans);
  std::set<std::string> unique;
  for (const auto& s : gold_surfaces) unique.insert(normalize_surface(s));
  m.gold_entities = unique.size();
  m.gold_spans = gold_spans;
  return m;
}

std::vector<std::vector<Token>> split_sentences(std::string_view text) {
  std::vector<std::vector<Token>> out;
  std::vector<Token> current;
  const auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    current.push_back(tokens[i]);
    const auto& s = tokens[i].surface;
    const bool terminal = s == "." || s == "!" || s == "?";
    if (terminal && i + 1 < tokens.size() &&
        tokens[i + 1].start > tokens[i].end &&
        is_upper(tokens[i + 1].surface.front())) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::string> extract_cancer_mentions(const CrfModel& model,
                                                 std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& sentence : split_sentences(text)) {
    const auto tags = viterbi_decode(model, sentence);
    for (const auto& span : decode_entities(sentence, tags)) {
      auto norm = normalize_surface(span.surface);
      if (!norm.empty() && seen.insert(norm).second) out.push_back(std::move(norm));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json crf_model_to_json(const CrfModel& model) {
  const auto& w = model.weights;
  json emission = json::array();
  for (std::size_t f = 0; f < w.num_features(); ++f) {
    emission.push_back({w.emission(f, Tag::O), w.emission(f, Tag::BCancer),
                        w.emission(f, Tag::ICancer)});
  }
  json transition = json::array();
  for (Tag from : kTags) {
    json row = json::array();
    for (Tag to : kTags) row.push_back(w.transition(from, to));
    transition.push_back(row);
  }
  json start = json::array(), end = json::array(), tags = json::array();
  for (Tag t : kTags) {
    start.push_back(w.start(t));
    end.push_back(w.end(t));
    tags.push_back(to_string(t));
  }
  return json{{"format_version", kCrfFormatVersion},
              {"feature_template_version", model.feature_template_version},
              {"tags", tags},
              {"features", model.features.names()},
              {"emission", emission},
              {"transition", transition},
              {"start", start},
              {"end", end}};
}

CrfModel crf_model_from_json(const json& j) {
  if (j.value("format_version", -1) != kCrfFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "unsupported CRF model format version");
  }
  const auto tags = j.at("tags").get<std::vector<std::string>>();
  if (tags != std::vector<std::string>{"O", "B-Cancer", "I-Cancer"}) {
    throw Error(ErrorCode::UnsupportedVersion, "unexpected CRF tag set");
  }
  CrfModel model(FeatureDictionary(j.at("features").get<std::vector<std::string>>()));
  model.feature_template_version = j.at("feature_template_version").get<std::string>();
  auto& w = model.weights;
  const auto& emission = j.at("emission");
  if (emission.size() != w.num_features()) {
    throw Error(ErrorCode::DimensionMismatch, "emission rows != feature count");
  }
  auto read_row = [](const json& row) {
    auto v = row.get<std::vector<double>>();
    if (v.size() != kNumTags) {
      throw Error(ErrorCode::DimensionMismatch, "CRF weight row has wrong width");
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::Parse, "non-finite CRF weight");
    }
    return v;
  };
  for (std::size_t f = 0; f < w.num_features(); ++f) {
    const auto row = read_row(emission[f]);
    for (Tag t : kTags) w.emission(f, t) = row[ti(t)];
  }
  const auto& transition = j.at("transition");
  if (transition.size() != kNumTags) {
    throw Error(ErrorCode::DimensionMismatch, "transition matrix has wrong size");
  }
  for (Tag from : kTags) {
    const auto row = read_row(transition[ti(from)]);
    for (Tag to : kTags) w.transition(from, to) = row[ti(to)];
  }
  const auto start = read_row(j.at("start"));
  const auto end = read_row(j.at("end"));
  for (Tag t : kTags) {
    w.start(t) = start[ti(t)];
    w.end(t) = end[ti(t)];
  }
  return model;
}

void save_crf_model(const std::filesystem::path& path, const CrfModel& model) {
  write_file(path, crf_model_to_json(model).dump());
}

CrfModel load_crf_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return crf_model_from_json(j);
}

}  // namespace redrug
