#pragma once

// cpp-httplib backed Transport. https needs CPPHTTPLIB_OPENSSL_SUPPORT at build time.

#include <string>

#include "httplib.h"

#include "hetcorr/errors.hpp"
#include "hetcorr/io/fetch.hpp"

namespace hetcorr::io {

class HttpTransport : public Transport {
 public:
  std::string get(const std::string& url, int timeout_seconds) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw FetchError("URL without scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) throw FetchError("unsupported URL (is https enabled in this build?): " + url);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) throw FetchError("GET " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw FetchError("GET " + url + " returned HTTP " + std::to_string(res->status));
    return res->body;
  }
};

}  // namespace hetcorr::io
