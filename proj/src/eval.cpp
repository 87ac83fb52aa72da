#include "redrug/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "redrug/error.hpp"

namespace redrug {

using nlohmann::json;

std::size_t FoldAssignment::fold_of(Pmid pmid) const {
  auto it = fold.find(pmid);
  if (it == fold.end()) {
    throw Error(ErrorCode::InvalidArgument, "pmid " + std::to_string(pmid) + " has no fold");
  }
  return it->second;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (const auto& [pmid, f] : fold) ++out.at(f);
  return out;
}

FoldAssignment kfold_split(std::span<const Pmid> pmids, std::size_t k, std::uint64_t seed) {
  std::vector<Pmid> unique(pmids.begin(), pmids.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (k < 2 || unique.size() < k) {
    throw Error(ErrorCode::TooFewDocuments,
                std::to_string(unique.size()) + " documents cannot fill " +
                    std::to_string(k) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(unique.begin(), unique.end(), rng);
  FoldAssignment out;
  out.k = k;
  for (std::size_t i = 0; i < unique.size(); ++i) out.fold[unique[i]] = i % k;
  return out;
}

const ClassMetrics& ClassReport::at(std::string_view cls) const {
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c] == cls) return per_class[c];
  }
  throw Error(ErrorCode::UnknownLabel, "no class '" + std::string(cls) + "' in report");
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void fill_macro(ClassReport& r) {
  const double n = static_cast<double>(r.per_class.size());
  r.macro_precision = r.macro_recall = r.macro_f1 = 0.0;
  for (const auto& m : r.per_class) {
    r.macro_precision += m.precision / n;
    r.macro_recall += m.recall / n;
    r.macro_f1 += m.f1 / n;
  }
}

}  // namespace

ClassReport f_score_report(std::span<const std::pair<std::size_t, std::size_t>> gold_pred,
                           const std::vector<std::string>& classes) {
  const std::size_t c = classes.size();
  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
  std::size_t correct = 0;
  ClassReport r;
  r.classes = classes;
  r.per_class.resize(c);
  for (const auto& [g, p] : gold_pred) {
    if (g >= c || p >= c) throw Error(ErrorCode::UnknownLabel, "label index outside class list");
    ++r.per_class[g].support;
    if (g == p) {
      ++tp[g];
      ++correct;
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  for (std::size_t i = 0; i < c; ++i) {
    auto& m = r.per_class[i];
    m.precision = ratio(static_cast<double>(tp[i]), static_cast<double>(tp[i] + fp[i]));
    m.recall = ratio(static_cast<double>(tp[i]), static_cast<double>(tp[i] + fn[i]));
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  }
  fill_macro(r);
  r.accuracy = ratio(static_cast<double>(correct), static_cast<double>(gold_pred.size()));
  return r;
}

ClassReport f_score_report(std::span<const std::pair<std::string, std::string>> gold_pred,
                           const std::vector<std::string>& classes) {
  auto index = [&](const std::string& label) {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error(ErrorCode::UnknownLabel, "unknown label '" + label + "'");
    return static_cast<std::size_t>(it - classes.begin());
  };
  std::vector<std::pair<std::size_t, std::size_t>> ids;
  ids.reserve(gold_pred.size());
  for (const auto& [g, p] : gold_pred) ids.emplace_back(index(g), index(p));
  return f_score_report(ids, classes);
}

CvReport cross_validate(std::span<const Pmid> example_pmids, std::span<const std::size_t> gold,
                        const std::vector<std::string>& classes,
                        const FoldAssignment& assignment, const FoldTrainer& trainer,
                        std::size_t threads) {
  if (example_pmids.size() != gold.size()) {
    throw Error(ErrorCode::InvalidArgument, "pmid and gold label counts differ");
  }
  const std::size_t k = assignment.k;
  std::vector<std::vector<std::size_t>> train(k), test(k);
  for (std::size_t i = 0; i < example_pmids.size(); ++i) {
    const std::size_t f = assignment.fold_of(example_pmids[i]);
    test[f].push_back(i);
    for (std::size_t o = 0; o < k; ++o) {
      if (o != f) train[o].push_back(i);
    }
  }

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(k);
  auto run_fold = [&](std::size_t f) {
    const FoldPredictor predict = trainer(f, train[f]);
    for (std::size_t i : test[f]) pairs[f].emplace_back(gold[i], predict(i));
  };
  if (threads <= 1) {
    for (std::size_t f = 0; f < k; ++f) run_fold(f);
  } else {
    for (std::size_t start = 0; start < k; start += threads) {
      std::vector<std::future<void>> jobs;
      for (std::size_t f = start; f < std::min(k, start + threads); ++f) {
        jobs.push_back(std::async(std::launch::async, run_fold, f));
      }
      for (auto& j : jobs) j.get();
    }
  }

  CvReport out;
  out.assignment = assignment;
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t f = 0; f < k; ++f) {
    out.folds.push_back(f_score_report(pairs[f], classes));
    all.insert(all.end(), pairs[f].begin(), pairs[f].end());
  }
  out.pooled = f_score_report(all, classes);

  out.mean.classes = classes;
  out.mean.per_class.resize(classes.size());
  const double n = static_cast<double>(k);
  for (const auto& fold : out.folds) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      auto& m = out.mean.per_class[c];
      m.precision += fold.per_class[c].precision / n;
      m.recall += fold.per_class[c].recall / n;
      m.f1 += fold.per_class[c].f1 / n;
      m.support += fold.per_class[c].support;
    }
    out.mean.accuracy += fold.accuracy / n;
  }
  fill_macro(out.mean);
  return out;
}

namespace {

template <typename Example>
std::vector<Pmid> pmids_of(std::span<const Example> examples) {
  std::vector<Pmid> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.pmid);
  return out;
}

template <typename Example>
std::vector<Example> select(std::span<const Example> examples,
                            std::span<const std::size_t> indices) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(examples[i]);
  return out;
}

}  // namespace

CvReport cross_validate_association(std::span<const AssociationExample> examples,
                                    const AbstractIndex& abstracts,
                                    const AssociationTrainParams& params, std::size_t k,
                                    std::uint64_t seed, const AssociationCvOptions& options) {
  const auto pmids = pmids_of(examples);
  const auto assignment = kfold_split(pmids, k, seed);

  AssociationTrainParams train_params = params;
  const AssociationMode eval_mode = options.binary_from_six ? AssociationMode::Binary : params.mode;
  if (options.binary_from_six) train_params.mode = AssociationMode::SixClass;

  std::vector<std::size_t> gold;
  gold.reserve(examples.size());
  for (const auto& ex : examples) gold.push_back(association_class_index(ex.label, eval_mode));

  auto trainer = [&](std::size_t fold, std::span<const std::size_t> train) -> FoldPredictor {
    auto fold_examples = select(examples, train);
    auto model = std::make_shared<AssociationModel>(
        train_association(fold_examples, abstracts, train_params, options.pretrained));
    if (options.on_fold_model) options.on_fold_model(fold, *model, fold_examples);
    return [model, examples, &abstracts, train_params, eval_mode](std::size_t i) {
      const auto& ex = examples[i];
      const auto pred = classify_association(*model, lookup_abstract(abstracts, ex.pmid),
                                             ex.drug, ex.cancer, train_params.mode);
      if (const auto* six = std::get_if<AssociationLabel>(&pred.label.label)) {
        return association_class_index(*six, eval_mode);
      }
      return static_cast<std::size_t>(std::get<CoarseLabel>(pred.label.label));
    };
  };
  return cross_validate(pmids, gold, class_names(eval_mode), assignment, trainer,
                        options.threads);
}

CvReport cross_validate_studytype(std::span<const StudyTypeExample> examples,
                                  const AbstractIndex& abstracts,
                                  const StudyTrainParams& params, std::size_t k,
                                  std::uint64_t seed, const StudyCvOptions& options) {
  const auto pmids = pmids_of(examples);
  const auto assignment = kfold_split(pmids, k, seed);
  std::vector<std::size_t> gold;
  gold.reserve(examples.size());
  for (const auto& ex : examples) gold.push_back(static_cast<std::size_t>(ex.label));

  auto trainer = [&](std::size_t fold, std::span<const std::size_t> train) -> FoldPredictor {
    auto fold_examples = select(examples, train);
    auto model = std::make_shared<StudyTypeModel>(
        train_studytype(fold_examples, abstracts, params));
    if (options.on_fold_model) options.on_fold_model(fold, *model, fold_examples);
    return [model, examples, &abstracts](std::size_t i) {
      const auto pred = predict_studytype(*model, lookup_abstract(abstracts, examples[i].pmid));
      return static_cast<std::size_t>(pred.label);
    };
  };
  return cross_validate(pmids, gold, study_type_class_names(), assignment, trainer,
                        options.threads);
}

json class_report_to_json(const ClassReport& report) {
  json classes = json::object();
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const auto& m = report.per_class[c];
    classes[report.classes[c]] = {{"precision", m.precision},
                                  {"recall", m.recall},
                                  {"f1", m.f1},
                                  {"support", m.support}};
  }
  return json{{"classes", classes},
              {"macro_precision", report.macro_precision},
              {"macro_recall", report.macro_recall},
              {"macro_f1", report.macro_f1},
              {"accuracy", report.accuracy}};
}

json cv_report_to_json(const CvReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds) folds.push_back(class_report_to_json(f));
  return json{{"k", report.assignment.k},
              {"fold_sizes", report.assignment.sizes()},
              {"mean", class_report_to_json(report.mean)},
              {"pooled", class_report_to_json(report.pooled)},
              {"folds", folds}};
}

std::string format_f1_table(const std::vector<std::pair<std::string, ClassReport>>& columns,
                            const std::map<std::string, std::string>& row_names) {
  if (columns.empty()) return {};
  const auto& classes = columns.front().second.classes;
  auto row_name = [&](const std::string& cls) {
    auto it = row_names.find(cls);
    return it == row_names.end() ? cls : it->second;
  };
  std::size_t first = 5;  // "Class"
  for (const auto& cls : classes) first = std::max(first, row_name(cls).size());
  std::vector<std::size_t> widths;
  for (const auto& [name, report] : columns) widths.push_back(std::max<std::size_t>(name.size(), 4));

  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("Class", first);
  for (std::size_t i = 0; i < columns.size(); ++i) out += "  " + pad(columns[i].first, widths[i]);
  while (out.back() == ' ') out.pop_back();
  out += "\n";
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::string line = pad(row_name(classes[c]), first);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", columns[i].second.at(classes[c]).f1);
      line += "  " + pad(buf, widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace redrug
