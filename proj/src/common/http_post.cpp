#include "http_post.hpp"

#include <cstdlib>

#include <httplib.h>

#include "cxr/errors.hpp"

namespace cxr::http {

nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body) {
    if (endpoint.base_url.empty()) throw ProviderError("provider base_url is not configured", false);

    httplib::Headers headers;
    if (!endpoint.credential_env.empty()) {
        const char* token = std::getenv(endpoint.credential_env.c_str());
        if (!token || !*token) {
            throw ProviderError("credential variable " + endpoint.credential_env + " is not set", false);
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    httplib::Client client(endpoint.base_url);
    if (!client.is_valid()) throw ProviderError("unsupported provider URL " + endpoint.base_url, false);
    client.set_connection_timeout(endpoint.timeout_seconds, 0);
    client.set_read_timeout(endpoint.timeout_seconds, 0);
    client.set_write_timeout(endpoint.timeout_seconds, 0);

    auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("request to " + endpoint.base_url + endpoint.path + " failed: " + httplib::to_string(res.error()),
                            true);
    }
    if (res->status != 200) {
        const bool retryable = res->status == 429 || res->status >= 500;
        throw ProviderError("provider answered HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                            retryable);
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw ProviderError("provider response is not JSON", false);
    return parsed;
}

}  // namespace cxr::http
