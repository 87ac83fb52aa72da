#include "redrug/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "redrug/corpus.hpp"
#include "redrug/error.hpp"

namespace redrug {

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::size_t dim,
                               std::vector<double> values)
    : vocab_(std::move(vocab)), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 1");
  if (values_.size() != vocab_.size() * dim_) {
    throw Error(ErrorCode::DimensionMismatch, "embedding matrix size != |V| x d");
  }
  for (double x : values_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::Parse, "non-finite embedding value");
  }
}

EmbeddingTable random_embedding_table(const Vocabulary& vocab, std::size_t dim,
                                      std::uint64_t seed) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 1");
  std::mt19937_64 rng(seed);
  const double scale = 0.5 / static_cast<double>(dim);
  std::uniform_real_distribution<double> uni(-scale, scale);
  std::vector<double> values(vocab.size() * dim);
  for (double& v : values) v = uni(rng);
  return EmbeddingTable(vocab, dim, std::move(values));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cosine of vectors of unequal size");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::vector<std::size_t> term_counts(std::span<const std::vector<std::string>> corpus,
                                     const Vocabulary& vocab) {
  std::vector<std::size_t> counts(vocab.size(), 0);
  for (const auto& doc : corpus) {
    for (const auto& tok : doc) {
      if (auto id = vocab.find(case_fold(tok))) ++counts[*id];
    }
  }
  return counts;
}

std::vector<double> negative_sampling_distribution(std::span<const std::size_t> counts) {
  std::vector<double> p(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = std::pow(static_cast<double>(counts[i]), 0.75);
    total += p[i];
  }
  if (total <= 0.0) throw Error(ErrorCode::EmptyCorpus, "no counts to sample from");
  for (double& x : p) x /= total;
  return p;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SgnsPairGradient sgns_pair_loss_and_grad(std::span<const double> center,
                                         std::span<const double> context,
                                         std::span<const double> negatives) {
  const std::size_t d = center.size();
  if (context.size() != d || (d > 0 && negatives.size() % d != 0)) {
    throw Error(ErrorCode::DimensionMismatch, "SGNS vectors disagree in dimension");
  }
  const std::size_t k = d == 0 ? 0 : negatives.size() / d;
  SgnsPairGradient g;
  g.center.assign(d, 0.0);
  g.context.assign(d, 0.0);
  g.negatives.assign(k * d, 0.0);

  // d/dx [-log s(x)] = s(x) - 1
  const double pos = dot(center, context);
  g.loss = -log_sigmoid(pos);
  const double coef_pos = sigmoid(pos) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    g.center[i] += coef_pos * context[i];
    g.context[i] = coef_pos * center[i];
  }
  // d/dx [-log s(-x)] = s(x)
  for (std::size_t n = 0; n < k; ++n) {
    const auto neg = negatives.subspan(n * d, d);
    const double s = dot(center, neg);
    g.loss -= log_sigmoid(-s);
    const double coef = sigmoid(s);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += coef * neg[i];
      g.negatives[n * d + i] = coef * center[i];
    }
  }
  return g;
}

EmbeddingTable train_skipgram(std::span<const std::vector<std::string>> corpus,
                              const SkipgramParams& params) {
  if (params.dim == 0 || params.window == 0) {
    throw Error(ErrorCode::InvalidArgument, "dim and window must be positive");
  }
  const Vocabulary vocab = build_vocab(corpus, params.min_count);
  if (vocab.empty()) throw Error(ErrorCode::EmptyCorpus, "no terms survive min_count");

  EmbeddingTable table = random_embedding_table(vocab, params.dim, params.seed);
  if (params.epochs <= 0) return table;

  const std::size_t d = params.dim;
  std::vector<double> output(vocab.size() * d, 0.0);
  const auto counts = term_counts(corpus, vocab);
  const auto dist = negative_sampling_distribution(counts);
  std::discrete_distribution<std::size_t> sampler(dist.begin(), dist.end());
  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<std::vector<std::size_t>> docs;
  std::size_t total_tokens = 0;
  for (const auto& doc : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& tok : doc) {
      if (auto id = vocab.find(case_fold(tok))) ids.push_back(*id);
    }
    total_tokens += ids.size();
    docs.push_back(std::move(ids));
  }

  const double total_steps =
      static_cast<double>(total_tokens) * static_cast<double>(params.epochs);
  double step = 0.0;
  std::vector<double> center_grad(d);
  std::vector<std::size_t> negs(params.negatives);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    for (const auto& full_doc : docs) {
      std::vector<std::size_t> doc;
      if (params.subsample > 0.0) {
        for (std::size_t id : full_doc) {
          const double f = static_cast<double>(counts[id]) /
                           static_cast<double>(total_tokens);
          const double keep = std::sqrt(params.subsample / f) + params.subsample / f;
          if (uni(rng) < keep) doc.push_back(id);
        }
      } else {
        doc = full_doc;
      }
      for (std::size_t pos = 0; pos < doc.size(); ++pos) {
        const double lr = params.learning_rate *
                          std::max(1e-4, 1.0 - step / std::max(1.0, total_steps));
        step += 1.0;
        const std::size_t lo = pos >= params.window ? pos - params.window : 0;
        const std::size_t hi = std::min(doc.size(), pos + params.window + 1);
        auto center = table.row(doc[pos]);
        for (std::size_t c = lo; c < hi; ++c) {
          if (c == pos) continue;
          const std::size_t ctx = doc[c];
          for (auto& n : negs) n = sampler(rng);

          std::fill(center_grad.begin(), center_grad.end(), 0.0);
          auto update = [&](std::size_t word, double label) {
            double* out = output.data() + word * d;
            const double s = dot(center, {out, d});
            loss_sum -= label > 0 ? log_sigmoid(s) : log_sigmoid(-s);
            const double coef = sigmoid(s) - label;
            for (std::size_t i = 0; i < d; ++i) {
              center_grad[i] += coef * out[i];
              out[i] -= lr * coef * center[i];
            }
          };
          update(ctx, 1.0);
          for (std::size_t n : negs) {
            if (n != ctx) update(n, 0.0);
          }
          for (std::size_t i = 0; i < d; ++i) center[i] -= lr * center_grad[i];
          ++pairs;
        }
      }
    }
    if (params.on_epoch) {
      params.on_epoch(epoch, pairs == 0 ? 0.0 : loss_sum / static_cast<double>(pairs));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Text format

EmbeddingTable parse_word_vectors(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::HeaderMismatch, "missing header", 1);
  std::istringstream header(line);
  std::size_t rows = 0, dim = 0;
  std::string extra;
  if (!(header >> rows >> dim) || (header >> extra) || dim == 0) {
    throw Error(ErrorCode::HeaderMismatch, "header must be \"V d\"", 1);
  }
  std::vector<std::string> words;
  std::vector<double> values;
  values.reserve(rows * dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::size_t n = 0;
    std::string num;
    while (fields >> num) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::Parse, "bad number '" + num + "'", line_no);
      }
      values.push_back(v);
      ++n;
    }
    if (n != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(dim) + " values, found " +
                      std::to_string(n),
                  line_no);
    }
    words.push_back(std::move(word));
  }
  if (words.size() != rows) {
    throw Error(ErrorCode::HeaderMismatch,
                "header declares " + std::to_string(rows) + " words, file has " +
                    std::to_string(words.size()));
  }
  return EmbeddingTable(Vocabulary(std::move(words), 1), dim, std::move(values));
}

EmbeddingTable load_word_vectors(const std::filesystem::path& path) {
  return parse_word_vectors(read_file(path));
}

std::string format_word_vectors(const EmbeddingTable& table) {
  std::string out = std::to_string(table.rows()) + " " + std::to_string(table.dim()) + "\n";
  char buf[32];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out += table.vocab().term(r);
    for (double v : table.row(r)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

void save_word_vectors(const std::filesystem::path& path, const EmbeddingTable& table) {
  write_file(path, format_word_vectors(table));
}

}  // namespace redrug
