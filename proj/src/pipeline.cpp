#include "redrug/pipeline.hpp"

#include <iostream>
#include <set>

#include "redrug/error.hpp"
#include "redrug/query_builder.hpp"

namespace redrug {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(what) + " does not exist: " + path.string());
  }
}

fs::path resolve(const fs::path& base, const json& value) {
  fs::path p = value.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::optional<fs::path> optional_path(const fs::path& base, const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return resolve(base, j[key]);
}

ordered_json path_string(const std::optional<fs::path>& p) {
  return p ? ordered_json(p->string()) : ordered_json(nullptr);
}

}  // namespace

void PipelineConfig::validate() const {
  require_file(drugs, "drug list");
  if (synonyms) require_file(*synonyms, "synonym map");
  if (cancer_terms) require_file(*cancer_terms, "cancer term list");
  if (design_terms) require_file(*design_terms, "design term list");
  if (excluded_pub_types) require_file(*excluded_pub_types, "publication type list");
  require_file(ner_model, "NER model");
  require_file(association_model, "association model");
  require_file(study_model, "study-type model");
  if (embeddings) require_file(*embeddings, "embeddings");
  if (transport == TransportKind::Replay) {
    if (!replay_dir || !fs::is_directory(*replay_dir)) {
      throw Error(ErrorCode::InvalidConfig, "replay transport needs an existing replay_dir");
    }
  }
  for (const fs::path& out : {output, summary}) {
    const fs::path parent = out.parent_path();
    if (out.empty() || (!parent.empty() && !fs::is_directory(parent))) {
      throw Error(ErrorCode::InvalidConfig, "output directory does not exist: " + out.string());
    }
  }
  client.validate();
}

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  PipelineConfig c;
  try {
    c.drugs = resolve(base, j.at("drugs"));
    c.synonyms = optional_path(base, j, "synonyms");
    c.cancer_terms = optional_path(base, j, "cancer_terms");
    c.design_terms = optional_path(base, j, "design_terms");
    c.excluded_pub_types = optional_path(base, j, "excluded_pub_types");

    const json client = j.value("client", json::object());
    const std::string transport = client.value("transport", std::string("http"));
    if (transport == "http") {
      c.transport = TransportKind::Http;
    } else if (transport == "replay") {
      c.transport = TransportKind::Replay;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown transport '" + transport + "'");
    }
    c.replay_dir = optional_path(base, client, "replay_dir");
    c.client.base_url = client.value("base_url", c.client.base_url);
    if (client.contains("api_key")) c.client.api_key = client["api_key"].get<std::string>();
    c.client = with_env_api_key(c.client);
    c.client.max_requests_per_second =
        client.value("max_requests_per_second", c.client.max_requests_per_second);
    c.client.page_size = client.value("page_size", c.client.page_size);
    c.client.max_retries = client.value("max_retries", c.client.max_retries);
    c.client.backoff_base =
        std::chrono::milliseconds(client.value("backoff_ms", c.client.backoff_base.count()));
    if (client.contains("limit") && !client["limit"].is_null()) {
      c.limit = client["limit"].get<std::size_t>();
    }

    const json& models = j.at("models");
    c.ner_model = resolve(base, models.at("ner"));
    c.association_model = resolve(base, models.at("association"));
    c.study_model = resolve(base, models.at("study_type"));
    c.embeddings = optional_path(base, models, "embeddings");

    c.mode = parse_association_mode(j.value("mode", std::string("six")));
    c.output = resolve(base, j.at("output"));
    c.summary = j.contains("summary") ? resolve(base, j["summary"])
                                      : fs::path(c.output.string() + ".summary.json");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::InvalidConfig, "config file does not exist: " + path.string());
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_pipeline_config(j, path.parent_path());
}

ordered_json pipeline_config_to_json(const PipelineConfig& c) {
  ordered_json client{
      {"transport", c.transport == TransportKind::Http ? "http" : "replay"},
      {"replay_dir", path_string(c.replay_dir)},
      {"base_url", c.client.base_url},
      {"api_key_set", c.client.api_key.has_value()},
      {"max_requests_per_second", c.client.max_requests_per_second},
      {"page_size", c.client.page_size},
      {"max_retries", c.client.max_retries},
      {"backoff_ms", c.client.backoff_base.count()},
      {"limit", c.limit ? ordered_json(*c.limit) : ordered_json(nullptr)}};
  return ordered_json{{"drugs", c.drugs.string()},
                      {"synonyms", path_string(c.synonyms)},
                      {"cancer_terms", path_string(c.cancer_terms)},
                      {"design_terms", path_string(c.design_terms)},
                      {"excluded_pub_types", path_string(c.excluded_pub_types)},
                      {"client", client},
                      {"models",
                       {{"ner", c.ner_model.string()},
                        {"association", c.association_model.string()},
                        {"study_type", c.study_model.string()},
                        {"embeddings", path_string(c.embeddings)}}},
                      {"mode", to_string(c.mode)},
                      {"output", c.output.string()},
                      {"summary", c.summary.string()}};
}

ordered_json summary_to_json(const RunSummary& s) {
  ordered_json reasons = ordered_json::object();
  for (const auto& [reason, n] : s.filter_reasons) reasons[std::string(to_string(reason))] = n;
  return ordered_json{{"drugs", s.drugs},
                      {"queries", s.queries},
                      {"fetched", s.fetched},
                      {"filter", reasons},
                      {"without_entities", s.without_entities},
                      {"pairs_classified", s.pairs_classified},
                      {"records", s.records},
                      {"record_errors", s.record_errors}};
}

PipelineModels load_pipeline_models(const PipelineConfig& config) {
  PipelineModels m{load_crf_model(config.ner_model),
                   load_association_model(config.association_model),
                   load_studytype_model(config.study_model)};
  if (m.association.mode != config.mode) {
    throw Error(ErrorCode::ModeMismatch,
                "association model is " + std::string(to_string(m.association.mode)) +
                    ", config asks for " + std::string(to_string(config.mode)));
  }
  return m;
}

std::vector<std::string> record_cancer_mentions(const CrfModel& ner,
                                                const AbstractRecord& record) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string* text : {&record.title, &record.abstract_text}) {
    for (auto& m : extract_cancer_mentions(ner, *text)) {
      if (seen.insert(m).second) out.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<EvidenceRecord> evidence_for_drug(const std::string& drug,
                                              const std::vector<std::string>& synonyms,
                                              std::span<const AbstractRecord> fetched,
                                              const FilterRules& rules,
                                              const PipelineModels& models,
                                              AssociationMode mode, RunSummary& summary) {
  std::vector<EvidenceRecord> out;
  for (const auto& record : fetched) {
    const FilterDecision decision = shallow_filter(record, drug, synonyms, rules);
    ++summary.filter_reasons[decision.reason];
    if (!decision.keep) continue;
    const auto mentions = record_cancer_mentions(models.ner, record);
    if (mentions.empty()) {
      ++summary.without_entities;
      continue;
    }
    for (const auto& cancer : mentions) {
      ++summary.pairs_classified;
      try {
        const auto assoc = classify_association(models.association, record, drug, cancer, mode);
        const auto study = predict_studytype(models.study, record);
        out.push_back(EvidenceRecord{drug, cancer, assoc.label, study.label, record.pmid,
                                     assoc.scores, study.scores});
      } catch (const Error& e) {
        ++summary.record_errors;
        std::cerr << "skipped pmid " << record.pmid << " (" << drug << ", " << cancer
                  << "): " << e.what() << "\n";
      }
    }
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, std::shared_ptr<Transport> transport,
                            std::shared_ptr<Clock> clock) {
  config.validate();
  const auto drugs = load_term_file(config.drugs);
  std::map<std::string, std::vector<std::string>> synonyms;
  if (config.synonyms) {
    try {
      synonyms = json::parse(read_file(*config.synonyms))
                     .get<std::map<std::string, std::vector<std::string>>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, config.synonyms->string() + ": " + e.what());
    }
  }
  QuerySpec base;
  base.cancer_terms =
      config.cancer_terms ? load_term_file(*config.cancer_terms) : default_cancer_terms();
  base.design_terms =
      config.design_terms ? load_term_file(*config.design_terms) : default_design_terms();
  FilterRules rules = FilterRules::defaults();
  rules.cancer_terms = base.cancer_terms;
  if (config.excluded_pub_types) rules.excluded_pub_types = load_term_file(*config.excluded_pub_types);

  const PipelineModels models = load_pipeline_models(config);

  if (!transport) {
    transport = config.transport == TransportKind::Replay
                    ? std::shared_ptr<Transport>(ReplayTransport::from_directory(*config.replay_dir))
                    : make_http_transport();
  }
  if (!clock) {
    clock = config.transport == TransportKind::Replay
                ? std::shared_ptr<Clock>(std::make_shared<ManualClock>())
                : std::shared_ptr<Clock>(std::make_shared<SteadyClock>());
  }
  PubmedClient client(config.client, transport, clock);

  PipelineResult result;
  result.summary.drugs = drugs.size();
  for (const auto& drug : drugs) {
    QuerySpec spec = base;
    spec.drug = drug;
    if (auto it = synonyms.find(drug); it != synonyms.end()) spec.synonyms = it->second;
    const std::string query = build_query(spec);
    ++result.summary.queries;
    const auto fetched = client.fetch_all(query, config.limit);
    result.summary.fetched += fetched.size();
    auto records = evidence_for_drug(drug, spec.synonyms, fetched, rules, models, config.mode,
                                     result.summary);
    result.records.insert(result.records.end(), std::make_move_iterator(records.begin()),
                          std::make_move_iterator(records.end()));
  }
  result.summary.records = result.records.size();
  return result;
}

std::string format_evidence_jsonl(std::span<const EvidenceRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace redrug
