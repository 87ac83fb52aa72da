#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redrug/corpus.hpp"

namespace redrug {

struct ClientConfig {
  std::string base_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";
  std::optional<std::string> api_key;
  double max_requests_per_second = 3.0;
  std::size_t page_size = 500;
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff_base{500};

  // Throws InvalidConfig: rate must be positive and at most 3 (10 with an
  // API key); page_size in [1, 10000]; base_url non-empty.
  void validate() const;
};

// Fills api_key from NCBI_API_KEY when unset and the variable is non-empty.
ClientConfig with_env_api_key(ClientConfig config);

struct SearchResult {
  std::uint64_t total_count = 0;
  std::vector<Pmid> pmids;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Blocking GET. Connection failures throw Error(Http) with status 0.
  virtual HttpResponse get(const std::string& url) = 0;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::nanoseconds now() = 0;
  virtual void sleep_for(std::chrono::nanoseconds d) = 0;
};

class SteadyClock final : public Clock {
 public:
  std::chrono::nanoseconds now() override;
  void sleep_for(std::chrono::nanoseconds d) override;
};

// Time only moves when someone sleeps; for tests and replays.
class ManualClock final : public Clock {
 public:
  std::chrono::nanoseconds now() override;
  void sleep_for(std::chrono::nanoseconds d) override;
  void advance(std::chrono::nanoseconds d);

 private:
  std::mutex mu_;
  std::chrono::nanoseconds t_{0};
};

// At most max(1, floor(rate)) requests in any half-open one-second window and
// at least 1/rate between consecutive requests. acquire() blocks (through the
// clock) until a request may go out and stamps it; callers share one limiter.
class RateLimiter {
 public:
  RateLimiter(double requests_per_second, Clock& clock);
  void acquire();
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::mutex mu_;
  Clock& clock_;
  std::size_t capacity_;
  std::chrono::nanoseconds spacing_;
  std::deque<std::chrono::nanoseconds> stamps_;
};

struct ClientStats {
  std::size_t requests = 0;
  std::size_t retries = 0;
  std::size_t esearch_calls = 0;
  std::size_t efetch_calls = 0;
};

inline constexpr std::size_t kMaxEfetchBatch = 200;

class PubmedClient {
 public:
  // Validates the config; the api_key is not read from the environment here.
  PubmedClient(ClientConfig config, std::shared_ptr<Transport> transport,
               std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());

  // One page at `offset`. retmax defaults to page_size. Errors: Http(status),
  // RateLimited after exhausted 429 retries, MalformedResponse.
  SearchResult esearch(std::string_view query, std::size_t offset,
                       std::optional<std::size_t> retmax = std::nullopt);

  // PubmedArticleSet XML for 1..200 pmids.
  std::string efetch(std::span<const Pmid> pmids);

  // Pages through the hits (at most `limit`), fetches in batches of 200, and
  // returns the parsed records deduplicated and sorted by pmid.
  std::vector<AbstractRecord> fetch_all(std::string_view query,
                                        std::optional<std::size_t> limit = std::nullopt);

  const ClientConfig& config() const noexcept { return config_; }
  ClientStats stats() const;

 private:
  HttpResponse request(const std::string& url);
  std::string with_key(std::string url) const;

  ClientConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;
  mutable std::mutex stats_mu_;
  ClientStats stats_;
};

// ESearch response in JSON (esearchresult) or XML (eSearchResult) form.
SearchResult parse_esearch_response(std::string_view body);

std::string url_encode(std::string_view s);
std::string url_decode(std::string_view s);
// Query parameters of a URL, decoded.
std::map<std::string, std::string> query_params(std::string_view url);

// Blocking HTTPS/HTTP GET.
std::shared_ptr<Transport> make_http_transport();

// Serves esearch/efetch from local records. A query is resolved by its first
// double-quoted term (the drug); `hits` maps case-folded drug names to pmids.
class ReplayTransport final : public Transport {
 public:
  ReplayTransport(std::vector<AbstractRecord> records,
                  std::map<std::string, std::vector<Pmid>> hits);
  // Directory holding corpus.jsonl and hits.json ({"drug": [pmid, ...]}).
  static std::shared_ptr<ReplayTransport> from_directory(const std::filesystem::path& dir);

  HttpResponse get(const std::string& url) override;
  std::vector<std::string> request_log() const;

 private:
  std::map<Pmid, AbstractRecord> records_;
  std::map<std::string, std::vector<Pmid>> hits_;
  mutable std::mutex mu_;
  std::vector<std::string> log_;
};

}  // namespace redrug
