// Command-line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "redrug/classifiers.hpp"
#include "redrug/corpus.hpp"
#include "redrug/embeddings.hpp"
#include "redrug/error.hpp"
#include "redrug/eval.hpp"
#include "redrug/filter.hpp"
#include "redrug/ner.hpp"
#include "redrug/pipeline.hpp"
#include "redrug/pubmed_client.hpp"
#include "redrug/query_builder.hpp"
#include "redrug/studytype.hpp"

namespace fs = std::filesystem;
using namespace redrug;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidTerm:
    case ErrorCode::EmptyTermList:
      return true;
    default:
      return false;
  }
}

void write_or_print(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_file(*path, text);
  } else {
    std::cout << text;
  }
}

void progress(const char* what, int epoch, double loss) {
  std::fprintf(stderr, "%s epoch %d loss %.6f\n", what, epoch + 1, loss);
}

// --------------------------------------------------------------------------

struct FetchArgs {
  std::string drug;
  std::vector<std::string> synonyms;
  std::optional<std::string> query;
  std::optional<std::string> cancer_terms, design_terms;
  std::string out;
  std::optional<std::size_t> limit;
  std::optional<std::string> replay_dir;
  ClientConfig client;
  long backoff_ms = 500;
};

void cmd_fetch(const FetchArgs& a) {
  std::string query;
  if (a.query) {
    query = *a.query;
  } else {
    QuerySpec spec;
    spec.drug = a.drug;
    spec.synonyms = a.synonyms;
    spec.cancer_terms = a.cancer_terms ? load_term_file(*a.cancer_terms) : default_cancer_terms();
    spec.design_terms = a.design_terms ? load_term_file(*a.design_terms) : default_design_terms();
    query = build_query(spec);
  }
  ClientConfig cfg = with_env_api_key(a.client);
  cfg.backoff_base = std::chrono::milliseconds(a.backoff_ms);
  std::shared_ptr<Transport> transport =
      a.replay_dir ? std::shared_ptr<Transport>(ReplayTransport::from_directory(*a.replay_dir))
                   : make_http_transport();
  PubmedClient client(cfg, transport);
  std::cerr << "query: " << query << "\n";
  const auto records = client.fetch_all(query, a.limit);
  save_abstracts(a.out, records);
  std::cerr << "fetched " << records.size() << " abstracts\n";
}

struct FilterArgs {
  std::string abstracts, drug, out;
  std::vector<std::string> synonyms;
  std::optional<std::string> cancer_terms, excluded;
};

void cmd_filter(const FilterArgs& a) {
  FilterRules rules = FilterRules::defaults();
  if (a.cancer_terms) rules.cancer_terms = load_term_file(*a.cancer_terms);
  if (a.excluded) rules.excluded_pub_types = load_term_file(*a.excluded);
  std::vector<AbstractRecord> kept;
  std::map<FilterReason, std::size_t> counts;
  for (auto& r : load_abstracts(a.abstracts)) {
    const auto d = shallow_filter(r, a.drug, a.synonyms, rules);
    ++counts[d.reason];
    if (d.keep) kept.push_back(std::move(r));
  }
  save_abstracts(a.out, kept);
  for (const auto& [reason, n] : counts) std::cout << to_string(reason) << "\t" << n << "\n";
}

struct NerArgs {
  std::string data, out;
  std::string policy = "strict";
  std::optional<std::string> eval;
  CrfTrainParams params;
};

NerTagPolicy parse_policy(const std::string& s) {
  if (s == "strict") return NerTagPolicy::Strict;
  if (s == "cancer-only") return NerTagPolicy::CancerOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown tag policy '" + s + "'");
}

void cmd_train_ner(NerArgs a) {
  const auto policy = parse_policy(a.policy);
  const auto data = load_ner_dataset(a.data, policy);
  a.params.on_epoch = [](int e, double l) { progress("crf", e, l); };
  const auto model = train_crf(data, a.params);
  save_crf_model(a.out, model);
  if (a.eval) {
    const auto m = evaluate_ner(model, load_ner_dataset(*a.eval, policy));
    std::printf("recall %.4f overlap %.4f (%zu entities, %zu spans)\n", m.recall, m.overlap,
                m.gold_entities, m.gold_spans);
  }
}

struct AssocArgs {
  std::string data, abstracts, out;
  std::string model = "logreg";
  std::string mode = "six";
  std::optional<std::string> embeddings;
  bool balanced = false;
  AssociationTrainParams params;
};

AssociationTrainParams resolve_assoc_params(const AssocArgs& a) {
  AssociationTrainParams p = a.params;
  p.kind = parse_classifier_kind(a.model);
  p.mode = parse_association_mode(a.mode);
  p.inverse_frequency_weights = a.balanced;
  return p;
}

void cmd_train_assoc(const AssocArgs& a) {
  auto p = resolve_assoc_params(a);
  p.logreg.on_epoch = [](int e, double l) { progress("logreg", e, l); };
  p.dan.on_epoch = [](int e, double l) { progress("dan", e, l); };
  const auto examples = load_association_dataset(a.data);
  const auto abstracts = load_abstracts(a.abstracts);
  std::optional<EmbeddingTable> vectors;
  if (a.embeddings) vectors = load_word_vectors(*a.embeddings);
  const auto model = train_association(examples, index_by_pmid(abstracts), p,
                                       vectors ? &*vectors : nullptr);
  save_association_model(a.out, model);
}

struct StudyArgs {
  std::string data, abstracts, out;
  std::string features = "all";
  StudyTrainParams params;
};

void cmd_train_study(StudyArgs a) {
  a.params.mode = parse_study_feature_mode(a.features);
  a.params.logreg.on_epoch = [](int e, double l) { progress("logreg", e, l); };
  const auto model = train_studytype(load_studytype_dataset(a.data),
                                     index_by_pmid(load_abstracts(a.abstracts)), a.params);
  save_studytype_model(a.out, model);
}

struct EmbArgs {
  std::string abstracts, out;
  SkipgramParams params;
};

void cmd_train_embeddings(EmbArgs a) {
  std::vector<std::vector<std::string>> docs;
  for (const auto& r : load_abstracts(a.abstracts)) docs.push_back(abstract_tokens(r));
  a.params.on_epoch = [](int e, double l) { progress("sgns", e, l); };
  save_word_vectors(a.out, train_skipgram(docs, a.params));
}

struct EvalArgs {
  std::string task = "assoc";
  std::string data;
  std::optional<std::string> abstracts, ner_model, out;
  std::string model = "logreg";
  std::string mode = "six";
  std::string features = "all";
  std::string policy = "strict";
  std::optional<std::string> embeddings;
  std::size_t k = 5;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
  bool binary_from_six = false;
  bool table = false;
  bool balanced = false;
  AssociationTrainParams assoc;
  StudyTrainParams study;
};

void cmd_evaluate(const EvalArgs& a) {
  nlohmann::json report;
  std::string table;
  if (a.task == "ner") {
    if (!a.ner_model) throw Error(ErrorCode::InvalidArgument, "--ner-model is required");
    const auto m = evaluate_ner(load_crf_model(*a.ner_model),
                                load_ner_dataset(a.data, parse_policy(a.policy)));
    report = {{"task", "ner"},
              {"recall", m.recall},
              {"overlap", m.overlap},
              {"gold_entities", m.gold_entities},
              {"gold_spans", m.gold_spans}};
  } else if (a.task == "assoc" || a.task == "study") {
    if (!a.abstracts) throw Error(ErrorCode::InvalidArgument, "--abstracts is required");
    const auto abstracts = index_by_pmid(load_abstracts(*a.abstracts));
    CvReport cv;
    std::string column;
    std::map<std::string, std::string> rows;
    if (a.task == "assoc") {
      AssocArgs tmp;
      tmp.model = a.model;
      tmp.mode = a.mode;
      tmp.balanced = a.balanced;
      tmp.params = a.assoc;
      const auto p = resolve_assoc_params(tmp);
      std::optional<EmbeddingTable> vectors;
      if (a.embeddings) vectors = load_word_vectors(*a.embeddings);
      AssociationCvOptions opts;
      opts.binary_from_six = a.binary_from_six;
      opts.pretrained = vectors ? &*vectors : nullptr;
      opts.threads = a.threads;
      cv = cross_validate_association(load_association_dataset(a.data), abstracts, p, a.k,
                                      a.seed, opts);
      report = {{"task", "assoc"},
                {"model", a.model},
                {"mode", a.binary_from_six ? "binary-from-six" : a.mode}};
      column = a.model == "logreg" ? "Log. Reg" : "DAN";
      for (AssociationLabel l : kAssociationLabels) {
        rows[std::string(to_string(l))] = std::string(display_name(l));
      }
    } else {
      StudyTrainParams p = a.study;
      p.mode = parse_study_feature_mode(a.features);
      StudyCvOptions opts;
      opts.threads = a.threads;
      cv = cross_validate_studytype(load_studytype_dataset(a.data), abstracts, p, a.k, a.seed,
                                    opts);
      report = {{"task", "study"}, {"features", a.features}};
      column = a.features;
    }
    report["seed"] = a.seed;
    report["report"] = cv_report_to_json(cv);
    table = format_f1_table({{column, cv.mean}}, rows);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown task '" + a.task + "'");
  }
  write_or_print(a.out, report.dump(2) + "\n");
  if (a.table && !table.empty()) std::cerr << table;
}

void cmd_run(const std::string& config_path) {
  const PipelineConfig config = load_pipeline_config(config_path);
  config.validate();
  std::cerr << pipeline_config_to_json(config).dump(2) << "\n";
  const auto result = run_pipeline(config);
  write_file(config.output, format_evidence_jsonl(result.records));
  nlohmann::ordered_json summary{{"config", pipeline_config_to_json(config)},
                                 {"summary", summary_to_json(result.summary)}};
  write_file(config.summary, summary.dump(2) + "\n");
  std::cerr << summary_to_json(result.summary).dump(2) << "\n";
}

void cmd_stats(const std::string& dataset, const std::string& task) {
  if (task == "assoc") {
    std::cout << format_association_stats(dataset_stats(load_association_dataset(dataset)));
  } else if (task == "study") {
    std::cout << format_studytype_stats(studytype_stats(load_studytype_dataset(dataset)));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown task '" + task + "'");
  }
}

void add_assoc_params(CLI::App* cmd, AssociationTrainParams& p) {
  cmd->add_option("--epochs", p.logreg.epochs, "LogReg epochs");
  cmd->add_option("--lr", p.logreg.learning_rate, "LogReg learning rate");
  cmd->add_option("--l2", p.logreg.l2, "LogReg L2");
  cmd->add_option("--min-count", p.min_count);
  cmd->add_option("--dan-epochs", p.dan.epochs);
  cmd->add_option("--dan-lr", p.dan.learning_rate);
  cmd->add_option("--dan-l2", p.dan.l2);
  cmd->add_option("--dan-dropout", p.dan.word_dropout_p);
  cmd->add_option("--dan-layers", p.dan.hidden_layers);
  cmd->add_option("--dan-width", p.dan.hidden_width, "0 means 3 x dim");
  cmd->add_option("--dan-batch", p.dan.batch_size);
  cmd->add_option_function<std::string>(
         "--dan-optimizer",
         [&p](const std::string& s) { p.dan.optimizer = parse_dan_optimizer(s); },
         "adagrad | sgd")
      ->check(CLI::IsMember({"adagrad", "sgd"}));
  cmd->add_option("--dim", p.skipgram.dim, "Vector size when pretraining in-fold");
  cmd->add_option("--sg-epochs", p.skipgram.epochs);
  cmd->add_option("--train-seed", p.logreg.seed)->each([&p](const std::string&) {
    p.dan.seed = p.logreg.seed;
    p.skipgram.seed = p.logreg.seed;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drug repurposing evidence extraction from PubMed abstracts"};
  app.require_subcommand(1);

  FetchArgs fetch;
  auto* f = app.add_subcommand("fetch", "Query PubMed and save abstracts as JSONL");
  f->add_option("--drug", fetch.drug, "Drug name");
  f->add_option("--synonym", fetch.synonyms, "Drug synonym (repeatable)");
  f->add_option("--query", fetch.query, "Raw query; overrides --drug");
  f->add_option("--cancer-terms", fetch.cancer_terms)->check(CLI::ExistingFile);
  f->add_option("--design-terms", fetch.design_terms)->check(CLI::ExistingFile);
  f->add_option("--out", fetch.out)->required();
  f->add_option("--limit", fetch.limit);
  f->add_option("--replay-dir", fetch.replay_dir, "Serve from a local fixture directory")
      ->check(CLI::ExistingDirectory);
  f->add_option("--rate", fetch.client.max_requests_per_second);
  f->add_option("--page-size", fetch.client.page_size);
  f->add_option("--retries", fetch.client.max_retries);
  f->add_option("--backoff-ms", fetch.backoff_ms);

  FilterArgs filt;
  auto* fl = app.add_subcommand("filter", "Apply the shallow filter to fetched abstracts");
  fl->add_option("--abstracts", filt.abstracts)->required()->check(CLI::ExistingFile);
  fl->add_option("--drug", filt.drug)->required();
  fl->add_option("--synonym", filt.synonyms);
  fl->add_option("--cancer-terms", filt.cancer_terms)->check(CLI::ExistingFile);
  fl->add_option("--excluded-pub-types", filt.excluded)->check(CLI::ExistingFile);
  fl->add_option("--out", filt.out)->required();

  NerArgs ner;
  auto* tn = app.add_subcommand("train-ner", "Train the CRF cancer tagger");
  tn->add_option("--data", ner.data, "CoNLL-style token/tag file")->required()->check(CLI::ExistingFile);
  tn->add_option("--policy", ner.policy, "strict | cancer-only");
  tn->add_option("--out", ner.out)->required();
  tn->add_option("--eval", ner.eval, "Held-out file to score")->check(CLI::ExistingFile);
  tn->add_option("--epochs", ner.params.epochs);
  tn->add_option("--l2", ner.params.l2);
  tn->add_option("--lr", ner.params.learning_rate);
  tn->add_option("--batch", ner.params.batch_size);
  tn->add_option("--seed", ner.params.seed);

  AssocArgs assoc;
  auto* ta = app.add_subcommand("train-assoc", "Train a therapeutic association classifier");
  ta->add_option("--data", assoc.data)->required()->check(CLI::ExistingFile);
  ta->add_option("--abstracts", assoc.abstracts)->required()->check(CLI::ExistingFile);
  ta->add_option("--model", assoc.model, "logreg | dan");
  ta->add_option("--mode", assoc.mode, "six | binary");
  ta->add_option("--embeddings", assoc.embeddings, "Pretrained vectors for dan")
      ->check(CLI::ExistingFile);
  ta->add_flag("--balanced", assoc.balanced, "Inverse class-frequency weights");
  add_assoc_params(ta, assoc.params);
  ta->add_option("--out", assoc.out)->required();

  StudyArgs study;
  auto* ts = app.add_subcommand("train-study", "Train the study-type classifier");
  ts->add_option("--data", study.data)->required()->check(CLI::ExistingFile);
  ts->add_option("--abstracts", study.abstracts)->required()->check(CLI::ExistingFile);
  ts->add_option("--features", study.features, "pt | bow | mesh | all");
  ts->add_option("--epochs", study.params.logreg.epochs);
  ts->add_option("--seed", study.params.logreg.seed);
  ts->add_option("--out", study.out)->required();

  EmbArgs emb;
  auto* te = app.add_subcommand("train-embeddings", "Train skip-gram word vectors");
  te->add_option("--abstracts", emb.abstracts)->required()->check(CLI::ExistingFile);
  te->add_option("--out", emb.out)->required();
  te->add_option("--dim", emb.params.dim);
  te->add_option("--window", emb.params.window);
  te->add_option("--negatives", emb.params.negatives);
  te->add_option("--epochs", emb.params.epochs);
  te->add_option("--min-count", emb.params.min_count);
  te->add_option("--subsample", emb.params.subsample);
  te->add_option("--seed", emb.params.seed);

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Cross-validate a model and emit a report");
  e->add_option("--task", ev.task, "assoc | study | ner");
  e->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
  e->add_option("--abstracts", ev.abstracts)->check(CLI::ExistingFile);
  e->add_option("--ner-model", ev.ner_model)->check(CLI::ExistingFile);
  e->add_option("--model", ev.model, "logreg | dan");
  e->add_option("--mode", ev.mode, "six | binary");
  e->add_flag("--binary-from-six", ev.binary_from_six,
              "Score six-class models on the coarse labels");
  e->add_option("--features", ev.features, "pt | bow | mesh | all");
  e->add_option("--policy", ev.policy);
  e->add_option("--embeddings", ev.embeddings)->check(CLI::ExistingFile);
  e->add_flag("--balanced", ev.balanced);
  add_assoc_params(e, ev.assoc);
  e->add_option("--k", ev.k);
  e->add_option("--seed", ev.seed);
  e->add_option("--threads", ev.threads);
  e->add_flag("--table", ev.table, "Print an F1 table to stderr");
  e->add_option("--out", ev.out);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  run->add_option("--config", config_path)->required();

  std::string dataset, stats_task = "assoc";
  auto* st = app.add_subcommand("stats", "Print label counts of a dataset");
  st->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  st->add_option("--task", stats_task, "assoc | study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*f) {
      if (!fetch.query && fetch.drug.empty()) {
        throw Error(ErrorCode::InvalidArgument, "fetch needs --drug or --query");
      }
      cmd_fetch(fetch);
    } else if (*fl) {
      cmd_filter(filt);
    } else if (*tn) {
      cmd_train_ner(ner);
    } else if (*ta) {
      cmd_train_assoc(assoc);
    } else if (*ts) {
      cmd_train_study(study);
    } else if (*te) {
      cmd_train_embeddings(emb);
    } else if (*e) {
      cmd_evaluate(ev);
    } else if (*run) {
      cmd_run(config_path);
    } else if (*st) {
      cmd_stats(dataset, stats_task);
    }
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return is_validation_error(err.code()) ? kValidation : kRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
