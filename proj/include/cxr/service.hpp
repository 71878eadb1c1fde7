#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxr/survey.hpp"

namespace httplib {
class Server;
}

namespace cxr::service {

/// Pool manifest: JSON list of {pair_id, image_path, report_path, source}.
/// Relative report paths resolve against the manifest's directory; image
/// paths stay relative and are served under /media.
std::vector<survey::SurveyItem> load_pool(const std::filesystem::path& manifest);

survey::Truths truths_of(const std::vector<survey::SurveyItem>& pool);

struct ServiceConfig {
    std::filesystem::path data_dir;
    std::uint64_t seed = 0;
    int rotation_seconds = survey::kDefaultRotationSeconds;
    std::size_t slots_per_session = 2;
    std::string admin_secret;  ///< empty disables /admin routes
};

/// Environment variable the CLI reads the operator secret from.
inline constexpr const char* kAdminSecretEnv = "CXR_ADMIN_SECRET";
inline constexpr const char* kAdminSecretHeader = "X-Admin-Secret";

struct Reply {
    int status = 200;
    nlohmann::json body;
};

/// Transport-independent request handlers. State lives in data_dir:
/// sessions.jsonl (session index) and responses.jsonl (response log), both
/// append-only, so a new instance over the same directory resumes where the
/// previous one stopped. Handlers are safe to call concurrently.
class SurveyService {
public:
    using Clock = std::function<survey::Timestamp()>;

    SurveyService(ServiceConfig config, std::vector<survey::SurveyItem> pool, Clock clock = {});
    ~SurveyService();
    SurveyService(const SurveyService&) = delete;
    SurveyService& operator=(const SurveyService&) = delete;

    /// POST /api/sessions  {participant_token} -> {session_id, slot_count, rotation_seconds}
    Reply create_session(const nlohmann::json& body);
    /// GET /api/sessions/{id}/slots/{index}
    Reply get_slot(const std::string& session_id, std::size_t index);
    /// POST /api/sessions/{id}/responses
    Reply post_response(const std::string& session_id, const nlohmann::json& body);
    /// GET /admin/aggregate with the operator secret.
    Reply aggregate(const std::optional<std::string>& secret);

    std::size_t session_count() const;

private:
    std::optional<survey::SurveySession> find_session(const std::string& id) const;

    ServiceConfig config_;
    std::vector<survey::SurveyItem> pool_;
    std::map<std::string, std::size_t> pool_index_;
    Clock clock_;

    mutable std::mutex sessions_mu_;
    std::map<std::string, survey::SurveySession> sessions_;
    std::uint64_t session_counter_ = 0;
    std::FILE* session_file_ = nullptr;

    survey::ResponseLog log_;
};

/// JSON error payload used by every non-2xx reply.
nlohmann::json error_body(std::string_view code, std::string_view message);

/// Registers the four API routes, /media static files and, when `ui_dir` is
/// given, the web UI at "/".
void mount_routes(httplib::Server& server, SurveyService& service, const std::filesystem::path& media_dir,
                  const std::optional<std::filesystem::path>& ui_dir = std::nullopt);

}  // namespace cxr::service
