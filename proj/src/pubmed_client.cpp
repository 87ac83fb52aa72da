#include "redrug/pubmed_client.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include <expat.h>
#include <nlohmann/json.hpp>

#include "redrug/error.hpp"

namespace redrug {

using nlohmann::json;
using std::chrono::nanoseconds;

void ClientConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorCode::InvalidConfig, "base_url is empty");
  const double cap = api_key ? 10.0 : 3.0;
  if (!(max_requests_per_second > 0.0) || max_requests_per_second > cap) {
    throw Error(ErrorCode::InvalidConfig,
                "max_requests_per_second must be in (0, " + std::to_string(int(cap)) +
                    "]" + (api_key ? "" : " without an API key"));
  }
  if (page_size < 1 || page_size > 10000) {
    throw Error(ErrorCode::InvalidConfig, "page_size must be in [1, 10000]");
  }
  if (backoff_base.count() < 0) {
    throw Error(ErrorCode::InvalidConfig, "backoff_base must be non-negative");
  }
}

ClientConfig with_env_api_key(ClientConfig config) {
  if (!config.api_key) {
    if (const char* key = std::getenv("NCBI_API_KEY"); key != nullptr && *key != '\0') {
      config.api_key = key;
    }
  }
  return config;
}

// ---------------------------------------------------------------------------
// Clocks and rate limiting

nanoseconds SteadyClock::now() {
  return std::chrono::duration_cast<nanoseconds>(
      std::chrono::steady_clock::now().time_since_epoch());
}

void SteadyClock::sleep_for(nanoseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

nanoseconds ManualClock::now() {
  std::lock_guard lock(mu_);
  return t_;
}

void ManualClock::sleep_for(nanoseconds d) { advance(d); }

void ManualClock::advance(nanoseconds d) {
  std::lock_guard lock(mu_);
  if (d.count() > 0) t_ += d;
}

RateLimiter::RateLimiter(double requests_per_second, Clock& clock)
    : clock_(clock),
      capacity_(std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(requests_per_second)))),
      spacing_(static_cast<std::int64_t>(std::ceil(1e9 / requests_per_second))) {
  if (!(requests_per_second > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "rate must be positive");
  }
}

void RateLimiter::acquire() {
  constexpr nanoseconds kWindow{1'000'000'000};
  // The lock is held while sleeping so stamps are taken in release order.
  std::lock_guard lock(mu_);
  nanoseconds now = clock_.now();
  nanoseconds ready = now;
  if (!stamps_.empty()) ready = std::max(ready, stamps_.back() + spacing_);
  if (stamps_.size() >= capacity_) {
    ready = std::max(ready, stamps_[stamps_.size() - capacity_] + kWindow);
  }
  if (ready > now) {
    clock_.sleep_for(ready - now);
    now = std::max(clock_.now(), ready);
  }
  stamps_.push_back(now);
  while (stamps_.size() > capacity_) stamps_.pop_front();
}

// ---------------------------------------------------------------------------
// URLs

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out.push_back(' ');
    } else if (s[i] == '%' && i + 2 < s.size()) {
      unsigned value = 0;
      auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, value, 16);
      if (ec == std::errc() && p == s.data() + i + 3) {
        out.push_back(static_cast<char>(value));
        i += 2;
      } else {
        out.push_back('%');
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::map<std::string, std::string> query_params(std::string_view url) {
  std::map<std::string, std::string> out;
  const auto q = url.find('?');
  if (q == std::string_view::npos) return out;
  std::string_view rest = url.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const auto part = rest.substr(0, amp);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      out[url_decode(part)] = "";
    } else {
      out[url_decode(part.substr(0, eq))] = url_decode(part.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ESearch parsing

namespace {

Pmid parse_pmid(std::string_view s) {
  Pmid v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v == 0) {
    throw Error(ErrorCode::MalformedResponse, "bad pmid '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_count(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedResponse, "bad count '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

SearchResult parse_esearch_json(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, e.what());
  }
  if (!j.is_object() || !j.contains("esearchresult")) {
    throw Error(ErrorCode::MalformedResponse, "no esearchresult object");
  }
  const auto& r = j["esearchresult"];
  if (r.contains("ERROR")) {
    throw Error(ErrorCode::MalformedResponse, "server error: " + r["ERROR"].dump());
  }
  if (!r.contains("count") || !r.contains("idlist") || !r["idlist"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, "esearchresult lacks count or idlist");
  }
  SearchResult out;
  const auto& count = r["count"];
  if (count.is_string()) {
    out.total_count = parse_count(count.get<std::string>());
  } else if (count.is_number_unsigned()) {
    out.total_count = count.get<std::uint64_t>();
  } else {
    throw Error(ErrorCode::MalformedResponse, "count is not a number");
  }
  for (const auto& id : r["idlist"]) {
    if (id.is_string()) {
      out.pmids.push_back(parse_pmid(id.get<std::string>()));
    } else if (id.is_number_unsigned()) {
      out.pmids.push_back(id.get<Pmid>());
    } else {
      throw Error(ErrorCode::MalformedResponse, "idlist entry is not a pmid");
    }
  }
  return out;
}

class EsearchXml {
 public:
  EsearchXml() : parser_(XML_ParserCreate(nullptr)) {
    if (parser_ == nullptr) throw std::bad_alloc();
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &EsearchXml::on_start, &EsearchXml::on_end);
    XML_SetCharacterDataHandler(parser_, &EsearchXml::on_text);
  }
  ~EsearchXml() { XML_ParserFree(parser_); }
  EsearchXml(const EsearchXml&) = delete;
  EsearchXml& operator=(const EsearchXml&) = delete;

  SearchResult parse(std::string_view body) {
    if (XML_Parse(parser_, body.data(), static_cast<int>(body.size()), XML_TRUE) !=
        XML_STATUS_OK) {
      throw Error(ErrorCode::MalformedResponse,
                  std::string("bad esearch XML: ") + XML_ErrorString(XML_GetErrorCode(parser_)));
    }
    if (!error_.empty()) throw Error(ErrorCode::MalformedResponse, "server error: " + error_);
    if (!count_) throw Error(ErrorCode::MalformedResponse, "eSearchResult has no Count");
    SearchResult out;
    out.total_count = parse_count(trim(*count_));
    for (const auto& id : ids_) out.pmids.push_back(parse_pmid(trim(id)));
    return out;
  }

 private:
  static void on_start(void* self, const XML_Char* name, const XML_Char**) {
    auto& p = *static_cast<EsearchXml*>(self);
    p.stack_.emplace_back(name);
    p.text_.clear();
  }
  static void on_text(void* self, const XML_Char* s, int len) {
    static_cast<EsearchXml*>(self)->text_.append(s, static_cast<std::size_t>(len));
  }
  static void on_end(void* self, const XML_Char*) {
    auto& p = *static_cast<EsearchXml*>(self);
    const auto& st = p.stack_;
    if (st.size() == 2 && st[0] == "eSearchResult") {
      if (st[1] == "Count") p.count_ = p.text_;
      if (st[1] == "ERROR") p.error_ = p.text_;
    }
    if (st.size() == 3 && st[0] == "eSearchResult" && st[1] == "IdList" && st[2] == "Id") {
      p.ids_.push_back(p.text_);
    }
    p.stack_.pop_back();
    p.text_.clear();
  }

  XML_Parser parser_;
  std::vector<std::string> stack_;
  std::string text_;
  std::optional<std::string> count_;
  std::string error_;
  std::vector<std::string> ids_;
};

}  // namespace

SearchResult parse_esearch_response(std::string_view body) {
  const auto t = trim(body);
  SearchResult out;
  if (!t.empty() && t.front() == '{') {
    out = parse_esearch_json(t);
  } else if (!t.empty() && t.front() == '<') {
    out = EsearchXml().parse(t);
  } else {
    throw Error(ErrorCode::MalformedResponse, "esearch body is neither JSON nor XML");
  }
  std::set<Pmid> seen(out.pmids.begin(), out.pmids.end());
  if (seen.size() != out.pmids.size()) {
    throw Error(ErrorCode::MalformedResponse, "duplicate pmids in esearch page");
  }
  if (out.pmids.size() > out.total_count) {
    throw Error(ErrorCode::MalformedResponse, "more ids than the reported count");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Client

PubmedClient::PubmedClient(ClientConfig config, std::shared_ptr<Transport> transport,
                           std::shared_ptr<Clock> clock)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      clock_(std::move(clock)),
      limiter_((config_.validate(), config_.max_requests_per_second), *clock_) {
  if (!transport_) throw Error(ErrorCode::InvalidConfig, "no transport");
}

ClientStats PubmedClient::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

std::string PubmedClient::with_key(std::string url) const {
  if (config_.api_key) url += "&api_key=" + url_encode(*config_.api_key);
  return url;
}

HttpResponse PubmedClient::request(const std::string& url) {
  for (std::size_t attempt = 0;; ++attempt) {
    limiter_.acquire();
    {
      std::lock_guard lock(stats_mu_);
      ++stats_.requests;
    }
    HttpResponse resp;
    try {
      resp = transport_->get(url);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Http) throw;
      resp.status = 0;
    }
    if (resp.status == 200) return resp;
    const bool retryable = resp.status == 0 || resp.status == 429 || resp.status >= 500;
    if (!retryable || attempt >= config_.max_retries) {
      if (resp.status == 429) {
        throw Error(ErrorCode::RateLimited,
                    "HTTP 429 after " + std::to_string(attempt) + " retries");
      }
      throw Error(ErrorCode::Http, "HTTP " + std::to_string(resp.status) + " for " + url,
                  std::nullopt, resp.status);
    }
    {
      std::lock_guard lock(stats_mu_);
      ++stats_.retries;
    }
    clock_->sleep_for(std::chrono::duration_cast<nanoseconds>(config_.backoff_base) *
                      (std::int64_t{1} << std::min<std::size_t>(attempt, 30)));
  }
}

SearchResult PubmedClient::esearch(std::string_view query, std::size_t offset,
                                   std::optional<std::size_t> retmax) {
  if (trim(query).empty()) throw Error(ErrorCode::InvalidArgument, "empty query");
  const std::size_t n = std::min(retmax.value_or(config_.page_size), config_.page_size);
  const std::string url = with_key(config_.base_url + "esearch.fcgi?db=pubmed&term=" +
                                   url_encode(query) + "&retstart=" + std::to_string(offset) +
                                   "&retmax=" + std::to_string(n) + "&retmode=json");
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.esearch_calls;
  }
  SearchResult r = parse_esearch_response(request(url).body);
  if (r.pmids.size() > n) {
    throw Error(ErrorCode::MalformedResponse, "page larger than retmax");
  }
  return r;
}

std::string PubmedClient::efetch(std::span<const Pmid> pmids) {
  if (pmids.empty() || pmids.size() > kMaxEfetchBatch) {
    throw Error(ErrorCode::InvalidArgument, "efetch takes 1 to 200 pmids");
  }
  std::string ids;
  for (Pmid p : pmids) {
    if (!ids.empty()) ids += ",";
    ids += std::to_string(p);
  }
  const std::string url =
      with_key(config_.base_url + "efetch.fcgi?db=pubmed&id=" + ids + "&retmode=xml");
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.efetch_calls;
  }
  std::string body = request(url).body;
  if (body.find("PubmedArticleSet") == std::string::npos) {
    throw Error(ErrorCode::MalformedResponse, "efetch body is not a PubmedArticleSet");
  }
  return body;
}

std::vector<AbstractRecord> PubmedClient::fetch_all(std::string_view query,
                                                    std::optional<std::size_t> limit) {
  std::vector<Pmid> pmids;
  std::set<Pmid> seen;
  std::size_t offset = 0;
  std::optional<std::uint64_t> total;
  while (!limit || pmids.size() < *limit) {
    std::optional<std::size_t> want;
    if (limit) want = *limit - pmids.size();
    const SearchResult page = esearch(query, offset, want);
    if (!total) total = page.total_count;
    for (Pmid p : page.pmids) {
      if (seen.insert(p).second) pmids.push_back(p);
    }
    offset += page.pmids.size();
    if (page.pmids.empty() || offset >= *total) break;
  }
  if (limit && pmids.size() > *limit) pmids.resize(*limit);

  std::map<Pmid, AbstractRecord> records;
  const std::set<Pmid> wanted(pmids.begin(), pmids.end());
  for (std::size_t b = 0; b < pmids.size(); b += kMaxEfetchBatch) {
    const auto batch = std::span<const Pmid>(pmids).subspan(
        b, std::min(kMaxEfetchBatch, pmids.size() - b));
    for (auto& r : parse_pubmed_xml(efetch(batch))) {
      if (wanted.contains(r.pmid)) records.try_emplace(r.pmid, std::move(r));
    }
  }
  std::vector<AbstractRecord> out;
  out.reserve(records.size());
  for (auto& [pmid, r] : records) out.push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------------------
// Replay transport

ReplayTransport::ReplayTransport(std::vector<AbstractRecord> records,
                                 std::map<std::string, std::vector<Pmid>> hits) {
  for (auto& r : records) records_.emplace(r.pmid, std::move(r));
  for (auto& [drug, ids] : hits) hits_[case_fold(drug)] = std::move(ids);
}

std::shared_ptr<ReplayTransport> ReplayTransport::from_directory(
    const std::filesystem::path& dir) {
  auto records = load_abstracts(dir / "corpus.jsonl");
  json j;
  try {
    j = json::parse(read_file(dir / "hits.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, (dir / "hits.json").string() + ": " + e.what());
  }
  return std::make_shared<ReplayTransport>(
      std::move(records), j.get<std::map<std::string, std::vector<Pmid>>>());
}

std::vector<std::string> ReplayTransport::request_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

HttpResponse ReplayTransport::get(const std::string& url) {
  {
    std::lock_guard lock(mu_);
    log_.push_back(url);
  }
  const auto params = query_params(url);
  auto param = [&](const std::string& key) -> std::string {
    auto it = params.find(key);
    return it == params.end() ? std::string() : it->second;
  };
  const std::string path = url.substr(0, url.find('?'));

  if (path.ends_with("esearch.fcgi")) {
    const std::string term = param("term");
    const auto open = term.find('"');
    const auto close = open == std::string::npos ? open : term.find('"', open + 1);
    if (close == std::string::npos) return {400, "query has no quoted term"};
    auto it = hits_.find(case_fold(term.substr(open + 1, close - open - 1)));
    const std::vector<Pmid> none;
    const auto& ids = it == hits_.end() ? none : it->second;
    const std::size_t start = std::stoul(param("retstart").empty() ? "0" : param("retstart"));
    const std::size_t max = std::stoul(param("retmax").empty() ? "20" : param("retmax"));
    json page = json::array();
    for (std::size_t i = start; i < ids.size() && i < start + max; ++i) {
      page.push_back(std::to_string(ids[i]));
    }
    json body{{"esearchresult", {{"count", std::to_string(ids.size())}, {"idlist", page}}}};
    return {200, body.dump()};
  }
  if (path.ends_with("efetch.fcgi")) {
    std::vector<AbstractRecord> out;
    std::string_view ids = params.count("id") ? params.at("id") : std::string_view();
    while (!ids.empty()) {
      const auto comma = ids.find(',');
      const auto id = ids.substr(0, comma);
      Pmid pmid = 0;
      std::from_chars(id.data(), id.data() + id.size(), pmid);
      if (auto r = records_.find(pmid); r != records_.end()) out.push_back(r->second);
      if (comma == std::string_view::npos) break;
      ids.remove_prefix(comma + 1);
    }
    return {200, write_pubmed_xml(out)};
  }
  return {404, "not found"};
}

}  // namespace redrug
