#include <httplib.h>

#include "cxr/service.hpp"

namespace cxr::service {

namespace {

void send(httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
}

nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(req.body, nullptr, false);
}

}  // namespace

void mount_routes(httplib::Server& server, SurveyService& service, const std::filesystem::path& media_dir,
                  const std::optional<std::filesystem::path>& ui_dir) {
    server.Post("/api/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        if (body.is_discarded()) return send(res, {400, error_body("bad_request", "body is not JSON")});
        send(res, service.create_session(body));
    });

    server.Get(R"(/api/sessions/([^/]+)/slots/(\d+))", [&service](const httplib::Request& req, httplib::Response& res) {
        std::size_t index = 0;
        try {
            index = std::stoul(req.matches[2].str());
        } catch (const std::exception&) {
            return send(res, {404, error_body("not_found", "slot index out of range")});
        }
        send(res, service.get_slot(req.matches[1].str(), index));
    });

    server.Post(R"(/api/sessions/([^/]+)/responses)", [&service](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        if (body.is_discarded()) return send(res, {400, error_body("bad_request", "body is not JSON")});
        send(res, service.post_response(req.matches[1].str(), body));
    });

    server.Get("/admin/aggregate", [&service](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> secret;
        if (req.has_header(kAdminSecretHeader)) secret = req.get_header_value(kAdminSecretHeader);
        send(res, service.aggregate(secret));
    });

    if (!media_dir.empty()) server.set_mount_point("/media", media_dir.string());
    if (ui_dir) server.set_mount_point("/", ui_dir->string());
}

}  // namespace cxr::service
