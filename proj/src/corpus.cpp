#include "redrug/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <expat.h>
#include <nlohmann/json.hpp>

#include "redrug/error.hpp"

namespace redrug {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Labels

std::string_view to_string(AssociationLabel label) {
  switch (label) {
    case AssociationLabel::NoRelation: return "NoRelation";
    case AssociationLabel::NoPhenotypicOutcome: return "NoPhenotypicOutcome";
    case AssociationLabel::Effective: return "Effective";
    case AssociationLabel::Detrimental: return "Detrimental";
    case AssociationLabel::NoEffect: return "NoEffect";
    case AssociationLabel::Inconclusive: return "Inconclusive";
  }
  return "";
}

std::string_view to_string(CoarseLabel label) {
  return label == CoarseLabel::Irrelevant ? "Irrelevant" : "Relevant";
}

std::string_view to_string(StudyTypeLabel label) {
  switch (label) {
    case StudyTypeLabel::Preclinical: return "Preclinical";
    case StudyTypeLabel::ClinicalObservational: return "ClinicalObservational";
    case StudyTypeLabel::ClinicalTrial: return "ClinicalTrial";
    case StudyTypeLabel::Other: return "Other";
  }
  return "";
}

std::string_view display_name(AssociationLabel label) {
  switch (label) {
    case AssociationLabel::NoRelation: return "No relation to cancer";
    case AssociationLabel::NoPhenotypicOutcome: return "No phenotypic outcome";
    case AssociationLabel::Effective: return "Effective";
    case AssociationLabel::Detrimental: return "Detrimental";
    case AssociationLabel::NoEffect: return "No effect";
    case AssociationLabel::Inconclusive: return "Inconclusive";
  }
  return "";
}

AssociationLabel parse_association_label(std::string_view s) {
  for (auto label : kAssociationLabels) {
    if (to_string(label) == s) return label;
  }
  throw Error(ErrorCode::UnknownLabel,
              "unknown association label '" + std::string(s) + "'");
}

CoarseLabel parse_coarse_label(std::string_view s) {
  for (auto label : kCoarseLabels) {
    if (to_string(label) == s) return label;
  }
  throw Error(ErrorCode::UnknownLabel,
              "unknown coarse label '" + std::string(s) + "'");
}

StudyTypeLabel parse_study_type_label(std::string_view s) {
  for (auto label : kStudyTypeLabels) {
    if (to_string(label) == s) return label;
  }
  throw Error(ErrorCode::UnknownLabel,
              "unknown study type '" + std::string(s) + "'");
}

std::vector<std::string> association_class_names() {
  std::vector<std::string> out;
  for (auto l : kAssociationLabels) out.emplace_back(to_string(l));
  return out;
}

std::vector<std::string> coarse_class_names() {
  std::vector<std::string> out;
  for (auto l : kCoarseLabels) out.emplace_back(to_string(l));
  return out;
}

std::vector<std::string> study_type_class_names() {
  std::vector<std::string> out;
  for (auto l : kStudyTypeLabels) out.emplace_back(to_string(l));
  return out;
}

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::O: return "O";
    case Tag::BCancer: return "B-Cancer";
    case Tag::ICancer: return "I-Cancer";
  }
  return "";
}

Tag parse_tag(std::string_view s) {
  if (s == "O") return Tag::O;
  if (s == "B-Cancer") return Tag::BCancer;
  if (s == "I-Cancer") return Tag::ICancer;
  throw Error(ErrorCode::UnknownLabel, "unknown tag '" + std::string(s) + "'");
}

bool is_iob_valid(std::span<const Tag> tags) {
  Tag prev = Tag::O;
  for (Tag t : tags) {
    if (t == Tag::ICancer && prev == Tag::O) return false;
    prev = t;
  }
  return true;
}

std::string_view AssociationOutcome::name() const {
  return std::visit([](auto l) { return to_string(l); }, label);
}

bool evidence_invariants_hold(const EvidenceRecord& record) {
  auto check = [](const std::map<std::string, double>& scores,
                  std::string_view label) {
    if (scores.empty()) return false;
    double sum = 0.0;
    double best = -1.0;
    for (const auto& [name, p] : scores) {
      if (!std::isfinite(p) || p < 0.0) return false;
      sum += p;
      best = std::max(best, p);
    }
    auto it = scores.find(std::string(label));
    return std::abs(sum - 1.0) <= 1e-6 && it != scores.end() &&
           it->second >= best;
  };
  return check(record.association_scores, record.association.name()) &&
         check(record.study_scores, to_string(record.study_type));
}

// ---------------------------------------------------------------------------
// PubMed XML

namespace {

std::string trim(std::string_view s) {
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

void push_unique(std::vector<std::string>& list, std::string value) {
  if (value.empty()) return;
  if (std::find(list.begin(), list.end(), value) == list.end()) {
    list.push_back(std::move(value));
  }
}

class PubmedSaxParser {
 public:
  PubmedSaxParser() : parser_(XML_ParserCreate(nullptr)) {
    if (parser_ == nullptr) throw std::bad_alloc();
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &PubmedSaxParser::on_start,
                          &PubmedSaxParser::on_end);
    XML_SetCharacterDataHandler(parser_, &PubmedSaxParser::on_text);
  }
  ~PubmedSaxParser() { XML_ParserFree(parser_); }
  PubmedSaxParser(const PubmedSaxParser&) = delete;
  PubmedSaxParser& operator=(const PubmedSaxParser&) = delete;

  std::vector<AbstractRecord> parse(std::string_view xml) {
    if (xml.size() > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
      throw Error(ErrorCode::MalformedXml, "document too large");
    }
    const auto status = XML_Parse(parser_, xml.data(),
                                  static_cast<int>(xml.size()), XML_TRUE);
    if (pending_error_) std::rethrow_exception(pending_error_);
    if (status != XML_STATUS_OK) {
      std::ostringstream msg;
      msg << XML_ErrorString(XML_GetErrorCode(parser_)) << " at line "
          << XML_GetCurrentLineNumber(parser_);
      throw Error(ErrorCode::MalformedXml, msg.str());
    }
    return std::move(records_);
  }

 private:
  enum class Field { None, Pmid, Title, AbstractText, PubType, Descriptor,
                     Journal, Year };

  static void on_start(void* self, const XML_Char* name, const XML_Char**) {
    static_cast<PubmedSaxParser*>(self)->start(name);
  }
  static void on_end(void* self, const XML_Char* name) {
    static_cast<PubmedSaxParser*>(self)->end(name);
  }
  static void on_text(void* self, const XML_Char* s, int len) {
    auto* p = static_cast<PubmedSaxParser*>(self);
    if (p->field_ != Field::None) p->text_.append(s, static_cast<std::size_t>(len));
  }

  bool parent_is(std::string_view name, std::size_t up = 1) const {
    return path_.size() >= up + 1 && path_[path_.size() - 1 - up] == name;
  }

  void start(std::string_view name) {
    path_.emplace_back(name);
    if (field_ != Field::None) return;  // inline markup inside a text field
    if (name == "PubmedArticle") {
      current_ = AbstractRecord{};
      abstract_parts_.clear();
      have_pmid_ = false;
      in_article_ = true;
      return;
    }
    if (!in_article_) return;
    Field f = Field::None;
    if (name == "PMID" && parent_is("MedlineCitation") && !have_pmid_) {
      f = Field::Pmid;
    } else if (name == "ArticleTitle") {
      f = Field::Title;
    } else if (name == "AbstractText" && parent_is("Abstract")) {
      f = Field::AbstractText;
    } else if (name == "PublicationType") {
      f = Field::PubType;
    } else if (name == "DescriptorName" && parent_is("MeshHeading")) {
      f = Field::Descriptor;
    } else if (name == "Title" && parent_is("Journal")) {
      f = Field::Journal;
    } else if (name == "Year" && parent_is("PubDate") &&
               parent_is("JournalIssue", 2)) {
      f = Field::Year;
    }
    if (f != Field::None) {
      field_ = f;
      field_depth_ = path_.size();
      text_.clear();
    }
  }

  void end(std::string_view name) {
    if (field_ != Field::None && path_.size() == field_depth_) finish_field();
    path_.pop_back();
    if (name == "PubmedArticle" && in_article_) {
      in_article_ = false;
      if (!have_pmid_) {
        fail(Error(ErrorCode::MissingPmid, "PubmedArticle without PMID"));
        return;
      }
      std::string joined;
      for (const auto& part : abstract_parts_) {
        if (part.empty()) continue;
        if (!joined.empty()) joined.push_back(' ');
        joined += part;
      }
      current_.abstract_text = std::move(joined);
      records_.push_back(std::move(current_));
    }
  }

  void finish_field() {
    std::string value = trim(text_);
    switch (field_) {
      case Field::Pmid: {
        Pmid pmid = 0;
        auto [ptr, ec] =
            std::from_chars(value.data(), value.data() + value.size(), pmid);
        if (ec != std::errc() || ptr != value.data() + value.size() ||
            pmid == 0) {
          fail(Error(ErrorCode::MalformedXml, "invalid PMID '" + value + "'"));
          break;
        }
        current_.pmid = pmid;
        have_pmid_ = true;
        break;
      }
      case Field::Title: current_.title = std::move(value); break;
      case Field::AbstractText: abstract_parts_.push_back(std::move(value)); break;
      case Field::PubType:
        push_unique(current_.publication_types, std::move(value));
        break;
      case Field::Descriptor:
        push_unique(current_.mesh_terms, std::move(value));
        break;
      case Field::Journal: current_.journal = std::move(value); break;
      case Field::Year: {
        int year = 0;
        auto [ptr, ec] =
            std::from_chars(value.data(), value.data() + value.size(), year);
        if (ec == std::errc()) current_.year = year;
        break;
      }
      case Field::None: break;
    }
    field_ = Field::None;
    text_.clear();
  }

  void fail(Error error) {
    if (!pending_error_) pending_error_ = std::make_exception_ptr(std::move(error));
    XML_StopParser(parser_, XML_FALSE);
  }

  XML_Parser parser_;
  std::vector<std::string> path_;
  std::vector<AbstractRecord> records_;
  AbstractRecord current_;
  std::vector<std::string> abstract_parts_;
  bool in_article_ = false;
  bool have_pmid_ = false;
  Field field_ = Field::None;
  std::size_t field_depth_ = 0;
  std::string text_;
  std::exception_ptr pending_error_;
};

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::vector<AbstractRecord> parse_pubmed_xml(std::string_view xml_bytes) {
  PubmedSaxParser parser;
  return parser.parse(xml_bytes);
}

std::string write_pubmed_xml(std::span<const AbstractRecord> records) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<PubmedArticleSet>\n";
  for (const auto& r : records) {
    out << "<PubmedArticle><MedlineCitation><PMID Version=\"1\">" << r.pmid
        << "</PMID><Article><Journal>";
    if (r.year) {
      out << "<JournalIssue><PubDate><Year>" << *r.year
          << "</Year></PubDate></JournalIssue>";
    }
    if (r.journal) out << "<Title>" << xml_escape(*r.journal) << "</Title>";
    out << "</Journal><ArticleTitle>" << xml_escape(r.title)
        << "</ArticleTitle>";
    if (!r.abstract_text.empty()) {
      out << "<Abstract><AbstractText>" << xml_escape(r.abstract_text)
          << "</AbstractText></Abstract>";
    }
    out << "<PublicationTypeList>";
    for (const auto& pt : r.publication_types) {
      out << "<PublicationType>" << xml_escape(pt) << "</PublicationType>";
    }
    out << "</PublicationTypeList></Article>";
    if (!r.mesh_terms.empty()) {
      out << "<MeshHeadingList>";
      for (const auto& m : r.mesh_terms) {
        out << "<MeshHeading><DescriptorName>" << xml_escape(m)
            << "</DescriptorName></MeshHeading>";
      }
      out << "</MeshHeadingList>";
    }
    out << "</MedlineCitation></PubmedArticle>\n";
  }
  out << "</PubmedArticleSet>\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON

ordered_json to_json(const AbstractRecord& r) {
  ordered_json j;
  j["pmid"] = r.pmid;
  j["title"] = r.title;
  j["abstract"] = r.abstract_text;
  j["pub_types"] = r.publication_types;
  j["mesh"] = r.mesh_terms;
  if (r.journal) j["journal"] = *r.journal;
  if (r.year) j["year"] = *r.year;
  return j;
}

namespace {

Pmid read_pmid(const json& j) {
  const auto& v = j.at("pmid");
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw Error(ErrorCode::Parse, "pmid must be a positive integer");
  }
  return v.get<Pmid>();
}

std::vector<std::string> read_unique_strings(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) push_unique(out, v.get<std::string>());
  return out;
}

template <typename Fn>
void for_each_jsonl_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, e.what(), line_no);
    }
    try {
      fn(j, line_no);
    } catch (const Error& e) {
      if (e.line()) throw;
      // Strip the decoration of the inner error; keep its code.
      std::string msg = e.what();
      if (auto colon = msg.find(": "); colon != std::string::npos) {
        msg = msg.substr(colon + 2);
      }
      throw Error(e.code(), msg, line_no);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, e.what(), line_no);
    }
  }
}

}  // namespace

AbstractRecord abstract_from_json(const json& j) {
  AbstractRecord r;
  r.pmid = read_pmid(j);
  r.title = j.value("title", std::string());
  r.abstract_text = j.value("abstract", std::string());
  r.publication_types = read_unique_strings(j, "pub_types");
  r.mesh_terms = read_unique_strings(j, "mesh");
  if (j.contains("journal") && !j.at("journal").is_null()) {
    r.journal = j.at("journal").get<std::string>();
  }
  if (j.contains("year") && !j.at("year").is_null()) {
    r.year = j.at("year").get<int>();
  }
  return r;
}

ordered_json to_json(const EvidenceRecord& r) {
  return ordered_json{{"drug", r.drug},
                      {"cancer", r.cancer},
                      {"association", r.association.name()},
                      {"study_type", to_string(r.study_type)},
                      {"pmid", r.pmid},
                      {"association_scores", r.association_scores},
                      {"study_scores", r.study_scores}};
}

EvidenceRecord evidence_from_json(const json& j) {
  EvidenceRecord r;
  r.drug = j.at("drug").get<std::string>();
  r.cancer = j.at("cancer").get<std::string>();
  const auto assoc = j.at("association").get<std::string>();
  if (assoc == "Irrelevant" || assoc == "Relevant") {
    r.association.label = parse_coarse_label(assoc);
  } else {
    r.association.label = parse_association_label(assoc);
  }
  r.study_type = parse_study_type_label(j.at("study_type").get<std::string>());
  r.pmid = read_pmid(j);
  r.association_scores =
      j.at("association_scores").get<std::map<std::string, double>>();
  r.study_scores = j.at("study_scores").get<std::map<std::string, double>>();
  return r;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::vector<AbstractRecord> parse_abstracts_jsonl(std::string_view text) {
  std::vector<AbstractRecord> out;
  std::set<Pmid> seen;
  for_each_jsonl_line(text, [&](const json& j, std::size_t line) {
    auto r = abstract_from_json(j);
    if (!seen.insert(r.pmid).second) {
      throw Error(ErrorCode::DuplicateKey,
                  "duplicate pmid " + std::to_string(r.pmid), line);
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<AbstractRecord> load_abstracts(const std::filesystem::path& path) {
  return parse_abstracts_jsonl(read_file(path));
}

void save_abstracts(const std::filesystem::path& path,
                    std::span<const AbstractRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<AssociationExample> parse_association_jsonl(std::string_view text) {
  std::vector<AssociationExample> out;
  std::set<std::tuple<Pmid, std::string, std::string>> seen;
  for_each_jsonl_line(text, [&](const json& j, std::size_t line) {
    AssociationExample ex;
    ex.pmid = read_pmid(j);
    ex.drug = j.at("drug").get<std::string>();
    ex.cancer = j.at("cancer").get<std::string>();
    if (ex.drug.empty() || ex.cancer.empty()) {
      throw Error(ErrorCode::Parse, "drug and cancer must be non-empty", line);
    }
    ex.label = parse_association_label(j.at("label").get<std::string>());
    if (!seen.emplace(ex.pmid, ex.drug, ex.cancer).second) {
      throw Error(ErrorCode::DuplicateKey,
                  "duplicate (pmid, drug, cancer) for pmid " +
                      std::to_string(ex.pmid),
                  line);
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<AssociationExample> load_association_dataset(
    const std::filesystem::path& path) {
  return parse_association_jsonl(read_file(path));
}

std::vector<StudyTypeExample> parse_studytype_jsonl(std::string_view text) {
  std::vector<StudyTypeExample> out;
  std::set<Pmid> seen;
  for_each_jsonl_line(text, [&](const json& j, std::size_t line) {
    StudyTypeExample ex;
    ex.pmid = read_pmid(j);
    ex.label = parse_study_type_label(j.at("label").get<std::string>());
    if (!seen.insert(ex.pmid).second) {
      throw Error(ErrorCode::DuplicateKey,
                  "duplicate pmid " + std::to_string(ex.pmid), line);
    }
    out.push_back(ex);
  });
  return out;
}

std::vector<StudyTypeExample> load_studytype_dataset(
    const std::filesystem::path& path) {
  return parse_studytype_jsonl(read_file(path));
}

std::vector<TaggedSentence> parse_ner_text(std::string_view text,
                                           NerTagPolicy policy) {
  std::vector<TaggedSentence> out;
  TaggedSentence current;
  std::size_t sentence_start_line = 0;
  std::string joined;

  auto flush = [&]() {
    if (current.tokens.empty()) return;
    if (!is_iob_valid(current.tags)) {
      throw Error(ErrorCode::Parse, "I-Cancer follows O or sentence start",
                  sentence_start_line);
    }
    out.push_back(std::move(current));
    current = TaggedSentence{};
    joined.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) {
      flush();
      if (nl == text.size()) break;
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) continue;
    std::istringstream fields(line);
    std::string surface, tag_text, extra;
    if (!(fields >> surface >> tag_text) || (fields >> extra)) {
      throw Error(ErrorCode::Parse, "expected two columns: token tag", line_no);
    }
    Tag tag = Tag::O;
    if (policy == NerTagPolicy::Strict) {
      try {
        tag = parse_tag(tag_text);
      } catch (const Error&) {
        throw Error(ErrorCode::UnknownLabel,
                    "unknown tag '" + tag_text + "'", line_no);
      }
    } else {
      if (tag_text == "B-Cancer") {
        tag = Tag::BCancer;
      } else if (tag_text == "I-Cancer") {
        tag = Tag::ICancer;
      } else if (tag_text != "O" && tag_text.rfind("B-", 0) != 0 &&
                 tag_text.rfind("I-", 0) != 0) {
        throw Error(ErrorCode::UnknownLabel,
                    "unknown tag '" + tag_text + "'", line_no);
      }
    }
    if (current.tokens.empty()) sentence_start_line = line_no;
    const std::size_t start = joined.empty() ? 0 : joined.size() + 1;
    if (!joined.empty()) joined.push_back(' ');
    joined += surface;
    current.tokens.push_back({surface, start, start + surface.size()});
    current.tags.push_back(tag);
    if (nl == text.size()) {
      flush();
      break;
    }
  }
  flush();
  return out;
}

std::vector<TaggedSentence> load_ner_dataset(const std::filesystem::path& path,
                                             NerTagPolicy policy) {
  return parse_ner_text(read_file(path), policy);
}

void save_association_dataset(const std::filesystem::path& path,
                              std::span<const AssociationExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += ordered_json{{"pmid", ex.pmid},
                        {"drug", ex.drug},
                        {"cancer", ex.cancer},
                        {"label", to_string(ex.label)}}
               .dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

void save_studytype_dataset(const std::filesystem::path& path,
                            std::span<const StudyTypeExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += ordered_json{{"pmid", ex.pmid}, {"label", to_string(ex.label)}}.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

void save_ner_dataset(const std::filesystem::path& path,
                      std::span<const TaggedSentence> sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out += s.tokens[i].surface;
      out.push_back('\t');
      out += to_string(s.tags[i]);
      out.push_back('\n');
    }
    out.push_back('\n');
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Statistics

AssociationStats dataset_stats(std::span<const AssociationExample> examples) {
  AssociationStats stats;
  for (auto label : kAssociationLabels) stats.counts[label] = 0;
  for (const auto& ex : examples) {
    ++stats.counts[ex.label];
    if (coarse(ex.label) == CoarseLabel::Irrelevant) {
      ++stats.irrelevant;
    } else {
      ++stats.relevant;
    }
  }
  stats.total = examples.size();
  return stats;
}

std::map<StudyTypeLabel, std::size_t> studytype_stats(
    std::span<const StudyTypeExample> examples) {
  std::map<StudyTypeLabel, std::size_t> counts;
  for (auto label : kStudyTypeLabels) counts[label] = 0;
  for (const auto& ex : examples) ++counts[ex.label];
  return counts;
}

std::string format_association_stats(const AssociationStats& stats) {
  using L = AssociationLabel;
  struct Row {
    std::string_view coarse;
    std::string_view name;
    std::size_t count;
  };
  // Row order of the published distribution table.
  const Row rows[] = {
      {"Irrelevant", display_name(L::NoRelation), stats.counts.at(L::NoRelation)},
      {"", display_name(L::NoPhenotypicOutcome),
       stats.counts.at(L::NoPhenotypicOutcome)},
      {"", "(subtotal)", stats.irrelevant},
      {"Relevant", display_name(L::Effective), stats.counts.at(L::Effective)},
      {"", display_name(L::Detrimental), stats.counts.at(L::Detrimental)},
      {"", display_name(L::Inconclusive), stats.counts.at(L::Inconclusive)},
      {"", display_name(L::NoEffect), stats.counts.at(L::NoEffect)},
      {"", "(subtotal)", stats.relevant},
      {"Total", "", stats.total},
  };
  std::ostringstream out;
  out << std::left << std::setw(14) << "Coarse-level" << std::setw(24)
      << "Association" << std::right << std::setw(7) << "Count" << '\n';
  for (const auto& row : rows) {
    out << std::left << std::setw(14) << row.coarse << std::setw(24) << row.name
        << std::right << std::setw(7) << row.count << '\n';
  }
  return out.str();
}

std::string format_studytype_stats(
    const std::map<StudyTypeLabel, std::size_t>& counts) {
  const std::pair<StudyTypeLabel, std::string_view> rows[] = {
      {StudyTypeLabel::Preclinical, "Preclinical"},
      {StudyTypeLabel::ClinicalObservational, "Clinical observational study"},
      {StudyTypeLabel::ClinicalTrial, "Clinical trial"},
      {StudyTypeLabel::Other, "Other"},
  };
  std::ostringstream out;
  std::size_t total = 0;
  out << std::left << std::setw(30) << "Study type" << std::right
      << std::setw(7) << "Count" << '\n';
  for (const auto& [label, name] : rows) {
    const auto it = counts.find(label);
    const std::size_t n = it == counts.end() ? 0 : it->second;
    total += n;
    out << std::left << std::setw(30) << name << std::right << std::setw(7) << n
        << '\n';
  }
  out << std::left << std::setw(30) << "Total" << std::right << std::setw(7)
      << total << '\n';
  return out.str();
}

}  // namespace redrug
