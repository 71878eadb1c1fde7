#include "../common/http_post.hpp"
#include "cxr/errors.hpp"
#include "cxr/reportgen.hpp"

namespace cxr::reportgen {

HttpProviderConfig HttpProviderConfig::from_json(const nlohmann::json& j) {
    HttpProviderConfig c;
    c.base_url = j.at("base_url").get<std::string>();
    c.path = j.value("path", c.path);
    c.credential_env = j.value("credential_env", std::string{});
    c.model_hint = j.value("model_hint", std::string{});
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    const auto wire = j.value("wire_format", std::string("native"));
    if (wire == "native") c.wire = WireFormat::native;
    else if (wire == "openai_chat") c.wire = WireFormat::openai_chat;
    else throw ValidationError("unknown wire_format '" + wire + "'");
    return c;
}

HttpGenerationProvider::HttpGenerationProvider(HttpProviderConfig config) : config_(std::move(config)) {}

nlohmann::json HttpGenerationProvider::request_body(const GenerationRequest& request) const {
    using nlohmann::json;
    if (config_.wire == WireFormat::native) {
        json body = {{"prompt", request.prompt}, {"max_length", request.max_length}};
        if (request.image_ref) body["image_ref"] = *request.image_ref;
        return body;
    }
    json content = request.prompt;
    if (request.image_ref) {
        content = json::array({{{"type", "text"}, {"text", request.prompt}},
                               {{"type", "image_url"}, {"image_url", {{"url", *request.image_ref}}}}});
    }
    json body = {{"messages", json::array({{{"role", "user"}, {"content", content}}})},
                 {"max_tokens", request.max_length}};
    if (!config_.model_hint.empty()) body["model"] = config_.model_hint;
    return body;
}

std::string HttpGenerationProvider::response_text(const nlohmann::json& body) const {
    try {
        if (config_.wire == WireFormat::native) return body.at("text").get<std::string>();
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("unexpected provider response: ") + e.what(), false);
    }
}

std::string HttpGenerationProvider::complete(const GenerationRequest& request) const {
    const http::Endpoint ep{config_.base_url, config_.path, config_.credential_env, config_.timeout_seconds};
    return response_text(http::post_json(ep, request_body(request)));
}

RadiologyReport generate_report(const GenerationRequest& request, const GenerationProvider& provider,
                                std::string report_id) {
    if (request.prompt.empty()) throw ContractError("generation request has an empty prompt");

    auto attempt = [&](const GenerationRequest& req) {
        std::string text = provider.complete(req);
        if (text.size() > req.max_length) {
            throw ProviderError("generated text of " + std::to_string(text.size()) + " characters exceeds the budget of " +
                                    std::to_string(req.max_length),
                                false);
        }
        return text;
    };

    const std::string first = attempt(request);
    try {
        return parse_report(first, ReportSource::ai, report_id);
    } catch (const ReportFormatError&) {
    }

    GenerationRequest retry = request;
    retry.prompt += "\n";
    retry.prompt += kFormatReminder;
    const std::string second = attempt(retry);
    try {
        return parse_report(second, ReportSource::ai, report_id);
    } catch (const ReportFormatError& e) {
        throw ReportFormatError(std::string("unparseable report after retry: ") + e.what(), second);
    }
}

}  // namespace cxr::reportgen
