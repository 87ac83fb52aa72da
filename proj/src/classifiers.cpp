#include "redrug/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "redrug/error.hpp"

namespace redrug {

using nlohmann::json;

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double hi = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::map<std::string, double> score_map(const std::vector<std::string>& classes,
                                        std::span<const double> probabilities) {
  std::map<std::string, double> out;
  for (std::size_t c = 0; c < classes.size(); ++c) out[classes[c]] = probabilities[c];
  return out;
}

namespace {

std::size_t count_distinct_labels(auto&& examples) {
  std::set<std::size_t> labels;
  for (const auto& ex : examples) labels.insert(ex.label);
  return labels.size();
}

json matrix_to_json(std::span<const double> values, std::size_t rows, std::size_t cols) {
  json m = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    m.push_back(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                    values.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
  }
  return m;
}

std::vector<double> matrix_from_json(const json& m, std::size_t rows, std::size_t cols) {
  if (m.size() != rows) throw Error(ErrorCode::DimensionMismatch, "matrix row count");
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& row : m) {
    auto r = row.get<std::vector<double>>();
    if (r.size() != cols) throw Error(ErrorCode::DimensionMismatch, "matrix column count");
    for (double x : r) {
      if (!std::isfinite(x)) throw Error(ErrorCode::Parse, "non-finite weight");
    }
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

void check_version(const json& j) {
  if (j.value("format_version", -1) != kClassifierFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "unsupported classifier format version");
  }
}

std::vector<double> logits(const LogRegModel& model, const SparseVector& x) {
  std::vector<double> z(model.num_classes());
  for (std::size_t c = 0; c < z.size(); ++c) {
    z[c] = model.bias[c];
    const auto w = model.row(c);
    for (const auto& [i, v] : x.entries()) z[c] += w[i] * v;
  }
  return z;
}

void check_dim(const LogRegModel& model, const SparseVector& x) {
  if (x.dimension() != model.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature vector has dimension " + std::to_string(x.dimension()) +
                    ", model expects " + std::to_string(model.dim));
  }
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Logistic regression

LogRegModel::LogRegModel(std::vector<std::string> class_list, std::size_t feature_dim,
                         std::string tag)
    : classes(std::move(class_list)),
      dim(feature_dim),
      weights(classes.size() * feature_dim, 0.0),
      bias(classes.size(), 0.0),
      feature_space_tag(std::move(tag)) {
  if (classes.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a classifier needs at least two classes");
  }
}

LogRegObjective logreg_loss_and_grad(const LogRegModel& model,
                                     std::span<const LabeledVector> examples,
                                     double l2) {
  LogRegObjective obj;
  obj.grad_weights.assign(model.weights.size(), 0.0);
  obj.grad_bias.assign(model.bias.size(), 0.0);
  for (const auto& ex : examples) {
    check_dim(model, ex.features);
    if (ex.label >= model.num_classes()) {
      throw Error(ErrorCode::InvalidArgument, "label index out of range");
    }
    const auto p = softmax(logits(model, ex.features));
    obj.value -= ex.weight * std::log(std::max(p[ex.label], 1e-300));
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double delta = ex.weight * (p[c] - (c == ex.label ? 1.0 : 0.0));
      obj.grad_bias[c] += delta;
      double* g = obj.grad_weights.data() + c * model.dim;
      for (const auto& [i, v] : ex.features.entries()) g[i] += delta * v;
    }
  }
  obj.value += 0.5 * l2 * squared_norm(model.weights);
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    obj.grad_weights[k] += l2 * model.weights[k];
  }
  return obj;
}

LogRegModel logreg_train(std::span<const LabeledVector> examples,
                         std::vector<std::string> classes, std::size_t feature_dim,
                         const LogRegParams& params) {
  if (count_distinct_labels(examples) < 2) {
    throw Error(ErrorCode::SingleClassDataset, "training data has fewer than two classes");
  }
  if (params.batch_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  }
  LogRegModel model(std::move(classes), feature_dim);
  for (const auto& ex : examples) {
    check_dim(model, ex.features);
    if (ex.label >= model.num_classes()) {
      throw Error(ErrorCode::InvalidArgument, "label index out of range");
    }
  }

  const double n = static_cast<double>(examples.size());
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed);
  std::vector<double> p;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += params.batch_size) {
      const std::size_t e = std::min(order.size(), b + params.batch_size);
      const double size = static_cast<double>(e - b);
      const double step = params.learning_rate / size;
      // Regularizer share of this batch, applied before the data step.
      const double decay = 1.0 - params.learning_rate * params.l2 / n;
      if (params.l2 > 0.0) {
        for (double& w : model.weights) w *= decay;
      }
      // Gradient of the batch at the pre-step weights.
      std::vector<std::pair<std::size_t, std::vector<double>>> deltas;
      deltas.reserve(e - b);
      for (std::size_t k = b; k < e; ++k) {
        const auto& ex = examples[order[k]];
        p = softmax(logits(model, ex.features));
        for (std::size_t c = 0; c < p.size(); ++c) {
          p[c] = ex.weight * (p[c] - (c == ex.label ? 1.0 : 0.0));
        }
        deltas.emplace_back(order[k], p);
      }
      for (const auto& [idx, delta] : deltas) {
        const auto& x = examples[idx].features;
        for (std::size_t c = 0; c < delta.size(); ++c) {
          model.bias[c] -= step * delta[c];
          auto w = model.row(c);
          for (const auto& [i, v] : x.entries()) w[i] -= step * delta[c] * v;
        }
      }
    }
    if (params.on_epoch) {
      params.on_epoch(epoch, logreg_loss_and_grad(model, examples, params.l2).value / n);
    }
  }
  return model;
}

Prediction logreg_predict(const LogRegModel& model, const SparseVector& features) {
  check_dim(model, features);
  Prediction out;
  out.probabilities = softmax(logits(model, features));
  out.label = argmax(out.probabilities);
  return out;
}

json logreg_to_json(const LogRegModel& model) {
  return json{{"format_version", kClassifierFormatVersion},
              {"class_list", model.classes},
              {"dim", model.dim},
              {"feature_space_tag", model.feature_space_tag},
              {"weights", matrix_to_json(model.weights, model.num_classes(), model.dim)},
              {"bias", model.bias}};
}

LogRegModel logreg_from_json(const json& j) {
  check_version(j);
  LogRegModel model(j.at("class_list").get<std::vector<std::string>>(),
                    j.at("dim").get<std::size_t>(),
                    j.value("feature_space_tag", std::string()));
  model.weights = matrix_from_json(j.at("weights"), model.num_classes(), model.dim);
  model.bias = j.at("bias").get<std::vector<double>>();
  if (model.bias.size() != model.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "bias length != class count");
  }
  return model;
}

void apply_inverse_frequency_weights(std::span<LabeledVector> examples,
                                     std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& ex : examples) ++counts.at(ex.label);
  const double n = static_cast<double>(examples.size());
  for (auto& ex : examples) {
    ex.weight = n / (static_cast<double>(num_classes) *
                     static_cast<double>(counts[ex.label]));
  }
}

// ---------------------------------------------------------------------------
// DAN

void DanModel::check() const {
  std::size_t width = 3 * embeddings.dim();
  for (const auto& layer : hidden) {
    if (layer.in != width || layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw Error(ErrorCode::InvalidArgument, "DAN hidden layer dimensions do not chain");
    }
    width = layer.out;
  }
  if (output.in != width || output.out != classes.size() ||
      output.weights.size() != output.in * output.out ||
      output.bias.size() != output.out) {
    throw Error(ErrorCode::InvalidArgument, "DAN output layer dimensions do not chain");
  }
  if (!(word_dropout_p >= 0.0 && word_dropout_p < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "word dropout must be in [0, 1)");
  }
  if (classes.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a classifier needs at least two classes");
  }
}

std::array<std::vector<std::size_t>, 3> dan_field_ids(const DanModel& model,
                                                      const DanFields& fields) {
  std::array<std::vector<std::size_t>, 3> ids;
  const std::vector<std::string>* parts[] = {&fields.abstract, &fields.drug,
                                             &fields.cancer};
  for (std::size_t f = 0; f < 3; ++f) {
    for (const auto& tok : *parts[f]) {
      if (auto id = model.embeddings.vocab().find(case_fold(tok))) ids[f].push_back(*id);
    }
  }
  return ids;
}

namespace {

void affine(const DenseLayer& layer, std::span<const double> x, std::vector<double>& z) {
  z.assign(layer.out, 0.0);
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* w = layer.weights.data() + o * layer.in;
    double s = layer.bias[o];
    for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * x[i];
    z[o] = s;
  }
}

}  // namespace

DanForward dan_forward(const DanModel& model, const DanFields& fields, bool train_mode,
                       std::uint64_t seed) {
  const auto ids = dan_field_ids(model, fields);
  if (ids[0].empty() && ids[1].empty() && ids[2].empty()) {
    throw Error(ErrorCode::AllFieldsEmpty, "no in-vocabulary token in any field");
  }
  DanForward fwd;
  const std::size_t d = model.embeddings.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const bool drop = train_mode && model.word_dropout_p > 0.0;
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t id : ids[f]) {
      if (drop && uni(rng) < model.word_dropout_p) continue;
      fwd.kept[f].push_back(id);
    }
  }

  std::vector<double> input(3 * d, 0.0);
  for (std::size_t f = 0; f < 3; ++f) {
    if (fwd.kept[f].empty()) continue;
    const double scale = 1.0 / static_cast<double>(fwd.kept[f].size());
    for (std::size_t id : fwd.kept[f]) {
      const auto row = model.embeddings.row(id);
      for (std::size_t i = 0; i < d; ++i) input[f * d + i] += scale * row[i];
    }
  }
  fwd.activations.push_back(std::move(input));
  std::vector<double> z;
  for (const auto& layer : model.hidden) {
    affine(layer, fwd.activations.back(), z);
    fwd.pre_activations.push_back(z);
    for (double& v : z) v = std::max(0.0, v);
    fwd.activations.push_back(z);
  }
  affine(model.output, fwd.activations.back(), z);
  fwd.probabilities = softmax(z);
  return fwd;
}

namespace {

DenseLayer zero_like(const DenseLayer& layer) { return DenseLayer(layer.in, layer.out); }

// Accumulates one example's gradient into `g`; returns its weighted loss.
double dan_backward(const DanModel& model, const DanForward& fwd, std::size_t label,
                    double weight, DanGradient& g) {
  const double loss = -weight * std::log(std::max(fwd.probabilities[label], 1e-300));
  std::vector<double> delta(fwd.probabilities.size());
  for (std::size_t c = 0; c < delta.size(); ++c) {
    delta[c] = weight * (fwd.probabilities[c] - (c == label ? 1.0 : 0.0));
  }

  auto backprop = [](const DenseLayer& layer, DenseLayer& grad,
                     std::span<const double> x, std::span<const double> dz) {
    std::vector<double> dx(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      grad.bias[o] += dz[o];
      const double* w = layer.weights.data() + o * layer.in;
      double* gw = grad.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) {
        gw[i] += dz[o] * x[i];
        dx[i] += w[i] * dz[o];
      }
    }
    return dx;
  };

  std::vector<double> dh = backprop(model.output, g.output, fwd.activations.back(), delta);
  for (std::size_t l = model.hidden.size(); l-- > 0;) {
    const auto& pre = fwd.pre_activations[l];
    for (std::size_t i = 0; i < dh.size(); ++i) {
      if (pre[i] <= 0.0) dh[i] = 0.0;
    }
    dh = backprop(model.hidden[l], g.hidden[l], fwd.activations[l], dh);
  }

  const std::size_t d = model.embeddings.dim();
  for (std::size_t f = 0; f < 3; ++f) {
    if (fwd.kept[f].empty()) continue;
    const double scale = 1.0 / static_cast<double>(fwd.kept[f].size());
    for (std::size_t id : fwd.kept[f]) {
      auto& row = g.embedding_rows[id];
      if (row.empty()) row.assign(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) row[i] += scale * dh[f * d + i];
    }
  }
  return loss;
}

DanGradient empty_gradient(const DanModel& model) {
  DanGradient g;
  for (const auto& layer : model.hidden) g.hidden.push_back(zero_like(layer));
  g.output = zero_like(model.output);
  return g;
}

double dan_weight_norm(const DanModel& model) {
  double s = squared_norm(model.output.weights);
  for (const auto& layer : model.hidden) s += squared_norm(layer.weights);
  return s;
}

}  // namespace

DanGradient dan_loss_and_grad(const DanModel& model, std::span<const DanExample> examples,
                              double l2, bool train_mode, std::uint64_t seed) {
  model.check();
  DanGradient g = empty_gradient(model);
  for (std::size_t k = 0; k < examples.size(); ++k) {
    const auto& ex = examples[k];
    const auto fwd = dan_forward(model, ex.fields, train_mode, seed + k);
    g.loss += dan_backward(model, fwd, ex.label, ex.weight, g);
  }
  g.loss += 0.5 * l2 * dan_weight_norm(model);
  auto add_l2 = [l2](const DenseLayer& layer, DenseLayer& grad) {
    for (std::size_t k = 0; k < layer.weights.size(); ++k) {
      grad.weights[k] += l2 * layer.weights[k];
    }
  };
  for (std::size_t l = 0; l < model.hidden.size(); ++l) add_l2(model.hidden[l], g.hidden[l]);
  add_l2(model.output, g.output);
  return g;
}

DanModel dan_init(const EmbeddingTable& init, std::vector<std::string> classes,
                  const DanParams& params) {
  DanModel model;
  model.embeddings = init;
  model.classes = std::move(classes);
  model.word_dropout_p = params.word_dropout_p;
  const std::size_t d = init.dim();
  const std::size_t width = params.hidden_width == 0 ? 3 * d : params.hidden_width;

  std::mt19937_64 rng(params.seed);
  auto glorot = [&](DenseLayer& layer) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (double& w : layer.weights) w = uni(rng);
  };
  std::size_t in = 3 * d;
  for (std::size_t l = 0; l < params.hidden_layers; ++l) {
    model.hidden.emplace_back(in, width);
    glorot(model.hidden.back());
    in = width;
  }
  model.output = DenseLayer(in, model.classes.size());
  glorot(model.output);
  model.check();
  return model;
}

DanModel dan_train(std::span<const DanExample> examples, std::vector<std::string> classes,
                   const DanParams& params, const EmbeddingTable& init) {
  if (count_distinct_labels(examples) < 2) {
    throw Error(ErrorCode::SingleClassDataset, "training data has fewer than two classes");
  }
  if (params.batch_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  }
  DanModel model = dan_init(init, std::move(classes), params);
  for (const auto& ex : examples) {
    if (ex.label >= model.classes.size()) {
      throw Error(ErrorCode::InvalidArgument, "label index out of range");
    }
  }
  const double n = static_cast<double>(examples.size());
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed + 1);

  // One accumulator of squared gradients per parameter, used by AdaGrad.
  const bool adagrad = params.optimizer == DanOptimizer::AdaGrad;
  std::vector<DenseLayer> acc_hidden;
  for (const auto& layer : model.hidden) acc_hidden.push_back(zero_like(layer));
  DenseLayer acc_output = zero_like(model.output);
  std::vector<double> acc_embed(adagrad ? model.embeddings.values().size() : 0, 0.0);
  constexpr double kEps = 1e-8;

  auto update = [&](double& w, double g, double& acc) {
    if (adagrad) {
      acc += g * g;
      w -= params.learning_rate * g / (std::sqrt(acc) + kEps);
    } else {
      w -= params.learning_rate * g;
    }
  };
  auto step_layer = [&](DenseLayer& layer, const DenseLayer& grad, DenseLayer& acc,
                        double scale) {
    const double l2 = params.l2 / n;
    for (std::size_t k = 0; k < layer.weights.size(); ++k) {
      update(layer.weights[k], grad.weights[k] * scale + l2 * layer.weights[k], acc.weights[k]);
    }
    for (std::size_t k = 0; k < layer.bias.size(); ++k) {
      update(layer.bias[k], grad.bias[k] * scale, acc.bias[k]);
    }
  };

  const std::size_t d = model.embeddings.dim();
  double unused = 0.0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += params.batch_size) {
      const std::size_t e = std::min(order.size(), b + params.batch_size);
      DanGradient g = empty_gradient(model);
      for (std::size_t k = b; k < e; ++k) {
        const auto& ex = examples[order[k]];
        const auto fwd = dan_forward(model, ex.fields, true, rng());
        dan_backward(model, fwd, ex.label, ex.weight, g);
      }
      const double scale = 1.0 / static_cast<double>(e - b);
      for (std::size_t l = 0; l < model.hidden.size(); ++l) {
        step_layer(model.hidden[l], g.hidden[l], acc_hidden[l], scale);
      }
      step_layer(model.output, g.output, acc_output, scale);
      for (const auto& [id, grad] : g.embedding_rows) {
        auto row = model.embeddings.row(id);
        for (std::size_t i = 0; i < d; ++i) {
          update(row[i], grad[i] * scale, adagrad ? acc_embed[id * d + i] : unused);
        }
      }
    }
    if (params.on_epoch) {
      params.on_epoch(epoch,
                      dan_loss_and_grad(model, examples, params.l2, false, 0).loss / n);
    }
  }
  return model;
}

Prediction dan_predict(const DanModel& model, const DanFields& fields) {
  Prediction out;
  out.probabilities = dan_forward(model, fields, false, 0).probabilities;
  out.label = argmax(out.probabilities);
  return out;
}

namespace {

json layer_to_json(const DenseLayer& layer) {
  return json{{"in", layer.in},
              {"out", layer.out},
              {"weights", matrix_to_json(layer.weights, layer.out, layer.in)},
              {"bias", layer.bias}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer layer(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>());
  layer.weights = matrix_from_json(j.at("weights"), layer.out, layer.in);
  layer.bias = j.at("bias").get<std::vector<double>>();
  return layer;
}

}  // namespace

json dan_to_json(const DanModel& model) {
  json hidden = json::array();
  for (const auto& layer : model.hidden) hidden.push_back(layer_to_json(layer));
  return json{{"format_version", kClassifierFormatVersion},
              {"class_list", model.classes},
              {"word_dropout_p", model.word_dropout_p},
              {"embeddings",
               {{"dim", model.embeddings.dim()},
                {"terms", model.embeddings.vocab().terms()},
                {"values", model.embeddings.values()}}},
              {"hidden", hidden},
              {"output", layer_to_json(model.output)}};
}

DanModel dan_from_json(const json& j) {
  check_version(j);
  DanModel model;
  model.classes = j.at("class_list").get<std::vector<std::string>>();
  model.word_dropout_p = j.at("word_dropout_p").get<double>();
  const auto& emb = j.at("embeddings");
  model.embeddings = EmbeddingTable(Vocabulary(emb.at("terms").get<std::vector<std::string>>(), 1),
                                    emb.at("dim").get<std::size_t>(),
                                    emb.at("values").get<std::vector<double>>());
  for (const auto& layer : j.at("hidden")) model.hidden.push_back(layer_from_json(layer));
  model.output = layer_from_json(j.at("output"));
  model.check();
  return model;
}

// ---------------------------------------------------------------------------
// Association

std::string_view to_string(DanOptimizer optimizer) {
  return optimizer == DanOptimizer::Sgd ? "sgd" : "adagrad";
}

DanOptimizer parse_dan_optimizer(std::string_view s) {
  if (s == "sgd") return DanOptimizer::Sgd;
  if (s == "adagrad") return DanOptimizer::AdaGrad;
  throw Error(ErrorCode::InvalidArgument, "unknown optimizer '" + std::string(s) + "'");
}

std::string_view to_string(AssociationMode mode) {
  return mode == AssociationMode::Binary ? "binary" : "six";
}

std::string_view to_string(ClassifierKind kind) {
  return kind == ClassifierKind::LogReg ? "logreg" : "dan";
}

AssociationMode parse_association_mode(std::string_view s) {
  if (s == "binary") return AssociationMode::Binary;
  if (s == "six" || s == "six-class" || s == "sixclass") return AssociationMode::SixClass;
  throw Error(ErrorCode::InvalidArgument, "unknown association mode '" + std::string(s) + "'");
}

ClassifierKind parse_classifier_kind(std::string_view s) {
  if (s == "logreg") return ClassifierKind::LogReg;
  if (s == "dan") return ClassifierKind::Dan;
  throw Error(ErrorCode::InvalidArgument, "unknown classifier '" + std::string(s) + "'");
}

std::vector<std::string> class_names(AssociationMode mode) {
  return mode == AssociationMode::Binary ? coarse_class_names() : association_class_names();
}

std::size_t association_class_index(AssociationLabel label, AssociationMode mode) {
  return mode == AssociationMode::Binary ? static_cast<std::size_t>(coarse(label))
                                         : static_cast<std::size_t>(label);
}

std::vector<std::string> abstract_tokens(const AbstractRecord& record) {
  auto out = tokenize_words(record.title);
  auto body = tokenize_words(record.abstract_text);
  out.insert(out.end(), std::make_move_iterator(body.begin()),
             std::make_move_iterator(body.end()));
  return out;
}

SparseVector association_features(const Vocabulary& vocab, const AbstractRecord& record,
                                  std::string_view drug, std::string_view cancer) {
  return concat_fields(bow_vector(abstract_tokens(record), vocab),
                       bow_vector(tokenize_words(drug), vocab),
                       bow_vector(tokenize_words(cancer), vocab));
}

DanFields association_fields(const AbstractRecord& record, std::string_view drug,
                             std::string_view cancer) {
  return {abstract_tokens(record), tokenize_words(drug), tokenize_words(cancer)};
}

AssociationPrediction classify_association(const AssociationModel& model,
                                           const AbstractRecord& record,
                                           std::string_view drug, std::string_view cancer,
                                           AssociationMode mode) {
  if (model.mode != mode) {
    throw Error(ErrorCode::ModeMismatch,
                "model was trained for " + std::string(to_string(model.mode)) +
                    " mode, queried in " + std::string(to_string(mode)));
  }
  Prediction pred;
  std::vector<std::string> classes;
  if (model.kind == ClassifierKind::LogReg) {
    pred = logreg_predict(model.logreg, association_features(model.vocab, record, drug, cancer));
    classes = model.logreg.classes;
  } else {
    pred = dan_predict(model.dan, association_fields(record, drug, cancer));
    classes = model.dan.classes;
  }
  if (classes != class_names(mode)) {
    throw Error(ErrorCode::ModeMismatch, "model class list does not match the mode");
  }
  AssociationPrediction out;
  if (mode == AssociationMode::Binary) {
    out.label.label = kCoarseLabels[pred.label];
  } else {
    out.label.label = kAssociationLabels[pred.label];
  }
  out.scores = score_map(classes, pred.probabilities);
  return out;
}

AbstractIndex index_by_pmid(std::span<const AbstractRecord> records) {
  AbstractIndex out;
  for (const auto& r : records) out.emplace(r.pmid, r);
  return out;
}

const AbstractRecord& lookup_abstract(const AbstractIndex& abstracts, Pmid pmid) {
  auto it = abstracts.find(pmid);
  if (it == abstracts.end()) {
    throw Error(ErrorCode::InvalidArgument, "no abstract for pmid " + std::to_string(pmid));
  }
  return it->second;
}

AssociationModel train_association(std::span<const AssociationExample> examples,
                                   const AbstractIndex& abstracts,
                                   const AssociationTrainParams& params,
                                   const EmbeddingTable* pretrained) {
  AssociationModel model;
  model.kind = params.kind;
  model.mode = params.mode;
  auto classes = class_names(params.mode);

  std::set<Pmid> seen;
  std::vector<std::vector<std::string>> docs;
  for (const auto& ex : examples) {
    const auto& record = lookup_abstract(abstracts, ex.pmid);
    if (seen.insert(ex.pmid).second) docs.push_back(abstract_tokens(record));
  }

  if (params.kind == ClassifierKind::LogReg) {
    for (const auto& ex : examples) {
      docs.push_back(tokenize_words(ex.drug));
      docs.push_back(tokenize_words(ex.cancer));
    }
    model.vocab = build_vocab(docs, params.min_count);
    std::vector<LabeledVector> data;
    data.reserve(examples.size());
    for (const auto& ex : examples) {
      data.push_back({association_features(model.vocab, lookup_abstract(abstracts, ex.pmid),
                                           ex.drug, ex.cancer),
                      association_class_index(ex.label, params.mode), 1.0});
    }
    if (params.inverse_frequency_weights) apply_inverse_frequency_weights(data, classes.size());
    model.logreg = logreg_train(data, std::move(classes), 3 * model.vocab.size(),
                                params.logreg);
    model.logreg.feature_space_tag =
        "bow-concat[abstract|drug|cancer]/V=" + std::to_string(model.vocab.size());
    return model;
  }

  EmbeddingTable init;
  if (pretrained != nullptr) {
    init = *pretrained;
  } else {
    for (const auto& ex : examples) {
      docs.push_back(tokenize_words(ex.drug));
      docs.push_back(tokenize_words(ex.cancer));
    }
    SkipgramParams sg = params.skipgram;
    sg.min_count = params.min_count;
    init = train_skipgram(docs, sg);
  }
  std::vector<DanExample> data;
  data.reserve(examples.size());
  for (const auto& ex : examples) {
    data.push_back({association_fields(lookup_abstract(abstracts, ex.pmid), ex.drug, ex.cancer),
                    association_class_index(ex.label, params.mode), 1.0});
  }
  if (params.inverse_frequency_weights) {
    std::vector<std::size_t> counts(classes.size(), 0);
    for (const auto& ex : data) ++counts[ex.label];
    for (auto& ex : data) {
      ex.weight = static_cast<double>(data.size()) /
                  (static_cast<double>(classes.size()) * static_cast<double>(counts[ex.label]));
    }
  }
  model.dan = dan_train(data, std::move(classes), params.dan, init);
  return model;
}

json association_model_to_json(const AssociationModel& model) {
  json j{{"format_version", kClassifierFormatVersion},
         {"kind", to_string(model.kind)},
         {"mode", to_string(model.mode)}};
  if (model.kind == ClassifierKind::LogReg) {
    j["vocab"] = model.vocab;
    j["model"] = logreg_to_json(model.logreg);
  } else {
    j["model"] = dan_to_json(model.dan);
  }
  return j;
}

AssociationModel association_model_from_json(const json& j) {
  check_version(j);
  AssociationModel model;
  model.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  model.mode = parse_association_mode(j.at("mode").get<std::string>());
  if (model.kind == ClassifierKind::LogReg) {
    model.vocab = j.at("vocab").get<Vocabulary>();
    model.logreg = logreg_from_json(j.at("model"));
    if (model.logreg.dim != 3 * model.vocab.size()) {
      throw Error(ErrorCode::DimensionMismatch, "model dimension != 3 |V|");
    }
  } else {
    model.dan = dan_from_json(j.at("model"));
  }
  return model;
}

void save_association_model(const std::filesystem::path& path, const AssociationModel& model) {
  write_file(path, association_model_to_json(model).dump());
}

AssociationModel load_association_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return association_model_from_json(j);
}

}  // namespace redrug
