// Independent reference computations for the tests: exhaustive CRF
// enumeration, central finite differences, and an instrumented E-utilities
// mock.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "redrug/classifiers.hpp"
#include "redrug/corpus.hpp"
#include "redrug/ner.hpp"
#include "redrug/pubmed_client.hpp"
#include "redrug/text.hpp"

namespace redrug::oracle {

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "Hepatoma", "cells", "5-FU", "in", "vitro", "breast", "cancer", "p53", "The",
      "melanoma", "and", "IC50", ".", "treated"};
  return words;
}

inline std::vector<Token> random_sentence(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> pick(0, word_pool().size() - 1);
  std::vector<Token> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = word_pool()[pick(rng)];
    out.push_back({w, pos, pos + w.size()});
    pos += w.size() + 1;
  }
  return out;
}

inline std::vector<Tag> random_tags(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<Tag> tags(n);
  for (auto& t : tags) t = static_cast<Tag>(pick(rng));
  return tags;
}

// A model over every feature the pool can fire, with N(0, scale) weights.
inline CrfModel random_crf(std::mt19937_64& rng, double scale) {
  std::vector<TaggedSentence> all;
  std::vector<Token> pool;
  std::size_t pos = 0;
  for (const auto& w : word_pool()) {
    pool.push_back({w, pos, pos + w.size()});
    pos += w.size() + 1;
  }
  // Every ordered pair gives every neighbour feature a chance to appear.
  for (const auto& a : pool) {
    for (const auto& b : pool) all.push_back({{a, b}, {Tag::O, Tag::O}});
  }
  for (const auto& a : pool) all.push_back({{a}, {Tag::O}});
  CrfModel model(FeatureDictionary::build(all));
  std::normal_distribution<double> normal(0.0, scale);
  for (double& w : model.weights.values()) w = normal(rng);
  return model;
}

// Score computed straight from the feature strings, without the library's
// emission or sequence scorers.
inline double reference_score(const CrfModel& m, const std::vector<Token>& tokens,
                              const std::vector<Tag>& tags) {
  double s = m.weights.start(tags.front()) + m.weights.end(tags.back());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& f : extract_features(tokens, i)) {
      if (auto id = m.features.find(f)) s += m.weights.emission(*id, tags[i]);
    }
    if (i > 0) s += m.weights.transition(tags[i - 1], tags[i]);
  }
  return s;
}

template <typename Fn>
void for_each_tag_sequence(std::size_t n, Fn&& fn) {
  std::vector<Tag> tags(n, Tag::O);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= kNumTags;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    // Most significant position first, so enumeration is lexicographic.
    for (std::size_t i = n; i-- > 0;) {
      tags[i] = static_cast<Tag>(c % kNumTags);
      c /= kNumTags;
    }
    fn(tags);
  }
}

struct BruteForce {
  double log_z = 0.0;
  std::vector<Tag> argmax;  // first maximum in lexicographic order
  double best = 0.0;
  std::vector<std::array<double, kNumTags>> marginals;
};

inline BruteForce brute_force(const CrfModel& m, const std::vector<Token>& tokens) {
  BruteForce out;
  std::vector<std::pair<std::vector<Tag>, double>> scored;
  double hi = -std::numeric_limits<double>::infinity();
  for_each_tag_sequence(tokens.size(), [&](const std::vector<Tag>& tags) {
    const double s = reference_score(m, tokens, tags);
    scored.emplace_back(tags, s);
    if (s > hi) {
      hi = s;
      out.argmax = tags;
    }
  });
  out.best = hi;
  double sum = 0.0;
  for (const auto& [tags, s] : scored) sum += std::exp(s - hi);
  out.log_z = hi + std::log(sum);
  out.marginals.assign(tokens.size(), {0.0, 0.0, 0.0});
  for (const auto& [tags, s] : scored) {
    const double p = std::exp(s - out.log_z);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      out.marginals[i][static_cast<std::size_t>(tags[i])] += p;
    }
  }
  return out;
}

// Central differences of `loss` with respect to every entry of `params`.
inline std::vector<double> central_differences(std::vector<double>& params,
                                               const std::function<double()>& loss,
                                               double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries that
// are zero analytically from turning rounding noise into a huge ratio.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / den);
  }
  return worst;
}

// Every trainable DAN parameter, embeddings first, then each layer's
// weights and bias; flatten_gradient uses the same order.
inline std::vector<double*> dan_parameters(DanModel& m) {
  std::vector<double*> out;
  for (double& x : m.embeddings.values()) out.push_back(&x);
  std::vector<DenseLayer*> layers;
  for (auto& h : m.hidden) layers.push_back(&h);
  layers.push_back(&m.output);
  for (auto* layer : layers) {
    for (double& x : layer->weights) out.push_back(&x);
    for (double& x : layer->bias) out.push_back(&x);
  }
  return out;
}

inline std::vector<double> flatten_gradient(const DanModel& m, const DanGradient& g) {
  std::vector<double> out;
  const std::size_t d = m.embeddings.dim();
  for (std::size_t r = 0; r < m.embeddings.rows(); ++r) {
    const auto it = g.embedding_rows.find(r);
    for (std::size_t i = 0; i < d; ++i) out.push_back(it == g.embedding_rows.end() ? 0.0 : it->second[i]);
  }
  std::vector<const DenseLayer*> layers;
  for (const auto& h : g.hidden) layers.push_back(&h);
  layers.push_back(&g.output);
  for (const auto* l : layers) {
    out.insert(out.end(), l->weights.begin(), l->weights.end());
    out.insert(out.end(), l->bias.begin(), l->bias.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// E-utilities mock: `hits` pmids for any query, every request stamped with the
// clock time, optional scripted failure statuses served first.

class MockEutils final : public Transport {
 public:
  MockEutils(std::size_t hits, std::shared_ptr<Clock> clock, Pmid first = 1000)
      : clock_(std::move(clock)) {
    for (std::size_t i = 0; i < hits; ++i) pmids_.push_back(first + i);
  }

  void fail_next(std::vector<int> statuses) {
    std::lock_guard lock(mu_);
    for (int s : statuses) failures_.push_back(s);
  }
  // Latency added to the clock by every request.
  void set_latency(std::chrono::nanoseconds d) { latency_ = d; }

  HttpResponse get(const std::string& url) override {
    std::lock_guard lock(mu_);
    stamps_.push_back(clock_->now());
    urls_.push_back(url);
    if (latency_.count() > 0) clock_->sleep_for(latency_);
    if (!failures_.empty()) {
      const int s = failures_.front();
      failures_.pop_front();
      return {s, "error"};
    }
    const auto params = query_params(url);
    if (url.find("esearch.fcgi") != std::string::npos) {
      const std::size_t start = std::stoul(params.at("retstart"));
      const std::size_t max = std::stoul(params.at("retmax"));
      nlohmann::json ids = nlohmann::json::array();
      for (std::size_t i = start; i < pmids_.size() && i < start + max; ++i) {
        ids.push_back(std::to_string(pmids_[i]));
      }
      return {200, nlohmann::json{{"esearchresult",
                                   {{"count", std::to_string(pmids_.size())},
                                    {"idlist", ids}}}}
                       .dump()};
    }
    std::vector<AbstractRecord> records;
    std::string ids = params.at("id");
    std::size_t pos = 0;
    while (pos <= ids.size()) {
      const auto comma = std::min(ids.find(',', pos), ids.size());
      AbstractRecord r;
      r.pmid = std::stoull(ids.substr(pos, comma - pos));
      r.title = "Record " + std::to_string(r.pmid);
      r.abstract_text = "Text of record " + std::to_string(r.pmid) + ".";
      records.push_back(r);
      pos = comma + 1;
    }
    return {200, write_pubmed_xml(records)};
  }

  std::vector<std::chrono::nanoseconds> stamps() const {
    std::lock_guard lock(mu_);
    return stamps_;
  }
  std::vector<std::string> urls() const {
    std::lock_guard lock(mu_);
    return urls_;
  }
  std::size_t count(std::string_view endpoint) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::count_if(urls_.begin(), urls_.end(), [&](const auto& u) {
      return u.find(endpoint) != std::string::npos;
    }));
  }

 private:
  std::shared_ptr<Clock> clock_;
  std::vector<Pmid> pmids_;
  mutable std::mutex mu_;
  std::deque<int> failures_;
  std::vector<std::chrono::nanoseconds> stamps_;
  std::vector<std::string> urls_;
  std::chrono::nanoseconds latency_{0};
};

// Largest number of stamps inside any half-open one-second window. Every
// maximal window starts at some stamp, so checking those is exhaustive.
inline std::size_t max_requests_in_window(std::vector<std::chrono::nanoseconds> stamps) {
  std::sort(stamps.begin(), stamps.end());
  std::size_t worst = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < stamps.size(); ++lo) {
    hi = std::max(hi, lo);
    while (hi < stamps.size() && stamps[hi] - stamps[lo] < std::chrono::seconds(1)) ++hi;
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

}  // namespace redrug::oracle
