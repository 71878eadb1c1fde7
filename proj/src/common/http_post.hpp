#pragma once

#include <string>

#include <json.hpp>

namespace cxr::http {

struct Endpoint {
    std::string base_url;        ///< scheme://host[:port]
    std::string path;
    std::string credential_env;  ///< bearer token variable; empty for none
    int timeout_seconds = 60;
};

/// POSTs a JSON body and returns the parsed JSON response. Transport errors,
/// 429 and 5xx raise a retryable ProviderError; other failures are final.
nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body);

}  // namespace cxr::http
