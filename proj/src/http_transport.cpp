#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "redrug/error.hpp"
#include "redrug/pubmed_client.hpp"

namespace redrug {

namespace {

class HttpTransport final : public Transport {
 public:
  HttpResponse get(const std::string& url) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "URL without scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) {
      throw Error(ErrorCode::Http, "request failed: " + httplib::to_string(res.error()),
                  std::nullopt, 0);
    }
    return {res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

}  // namespace redrug
