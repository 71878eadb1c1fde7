#include <chrono>
#include <cstdio>
#include <unistd.h>

#include "../common/text_util.hpp"
#include "cxr/errors.hpp"
#include "cxr/random.hpp"
#include "cxr/service.hpp"

namespace cxr::service {

using survey::SurveySession;

std::vector<survey::SurveyItem> load_pool(const std::filesystem::path& manifest) {
    const auto doc = nlohmann::json::parse(text::read_file(manifest), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) throw ValidationError(manifest.string() + ": expected a JSON list");
    const auto base = manifest.parent_path();
    std::vector<survey::SurveyItem> pool;
    for (const auto& e : doc) {
        survey::SurveyItem item;
        item.pair_id = e.at("pair_id").get<std::string>();
        item.image_ref = e.at("image_path").get<std::string>();
        std::filesystem::path report = e.at("report_path").get<std::string>();
        if (report.is_relative()) report = base / report;
        const auto source = reportgen::parse_source(e.at("source").get<std::string>());
        item.report = reportgen::parse_report(text::read_file(report), source, item.pair_id);
        pool.push_back(std::move(item));
    }
    return pool;
}

survey::Truths truths_of(const std::vector<survey::SurveyItem>& pool) {
    survey::Truths t;
    for (const auto& item : pool) t[item.pair_id] = item.report.source;
    return t;
}

nlohmann::json error_body(std::string_view code, std::string_view message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

namespace {

survey::Timestamp system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

Reply fail(int status, std::string_view code, std::string_view message) { return {status, error_body(code, message)}; }

/// Maps library errors onto HTTP statuses.
template <typename Fn>
Reply guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        return fail(400, "validation", e.what());
    } catch (const ContractError& e) {
        return fail(400, "bad_request", e.what());
    } catch (const NotFoundError& e) {
        return fail(404, "not_found", e.what());
    } catch (const ConflictError& e) {
        return fail(409, "conflict", e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(400, "bad_request", e.what());
    } catch (const std::exception& e) {
        return fail(500, "internal", e.what());
    }
}

std::string session_id_for(std::uint64_t counter, std::uint64_t seed) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "s%06llu-%08llx", static_cast<unsigned long long>(counter),
                  static_cast<unsigned long long>(mix_seed(seed, counter) & 0xffffffffULL));
    return buf;
}

}  // namespace

SurveyService::SurveyService(ServiceConfig config, std::vector<survey::SurveyItem> pool, Clock clock)
    : config_(std::move(config)),
      pool_(std::move(pool)),
      clock_(clock ? std::move(clock) : Clock(system_now)),
      log_(config_.data_dir / "responses.jsonl") {
    for (std::size_t i = 0; i < pool_.size(); ++i) pool_index_[pool_[i].pair_id] = i;

    const auto index_path = config_.data_dir / "sessions.jsonl";
    if (std::filesystem::exists(index_path)) {
        const auto content = text::read_file(index_path);
        std::size_t valid_end = 0, pos = 0;
        while (pos < content.size()) {
            const auto nl = content.find('\n', pos);
            if (nl == std::string::npos) break;  // torn tail
            const std::string_view line(content.data() + pos, nl - pos);
            if (!text::trim(line).empty()) {
                auto s = nlohmann::json::parse(line).get<SurveySession>();
                sessions_[s.session_id] = std::move(s);
                ++session_counter_;
            }
            pos = valid_end = nl + 1;
        }
        if (valid_end < content.size()) std::filesystem::resize_file(index_path, valid_end);
    }
    session_file_ = std::fopen(index_path.c_str(), "ab");
    if (!session_file_) throw Error("cannot open session index " + index_path.string());
}

SurveyService::~SurveyService() {
    if (session_file_) std::fclose(session_file_);
}

std::size_t SurveyService::session_count() const {
    std::lock_guard lock(sessions_mu_);
    return sessions_.size();
}

std::optional<SurveySession> SurveyService::find_session(const std::string& id) const {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

Reply SurveyService::create_session(const nlohmann::json& body) {
    return guarded([&]() -> Reply {
        if (!body.is_object() || !body.contains("participant_token") || !body["participant_token"].is_string() ||
            body["participant_token"].get<std::string>().empty()) {
            return fail(400, "validation", "participant_token is required");
        }
        if (pool_.size() < std::max<std::size_t>(config_.slots_per_session, 2)) {
            return fail(503, "pool_unavailable", "survey pool is too small for a session");
        }
        std::lock_guard lock(sessions_mu_);
        const auto counter = session_counter_;
        auto session = survey::create_session(session_id_for(counter, config_.seed),
                                              body["participant_token"].get<std::string>(), pool_,
                                              config_.slots_per_session, mix_seed(config_.seed, counter),
                                              config_.rotation_seconds, clock_());
        const std::string line = nlohmann::json(session).dump() + "\n";
        if (std::fwrite(line.data(), 1, line.size(), session_file_) != line.size() || std::fflush(session_file_) != 0 ||
            ::fsync(::fileno(session_file_)) != 0) {
            throw Error("failed to persist session");
        }
        ++session_counter_;
        Reply r{201,
                {{"session_id", session.session_id},
                 {"slot_count", session.slots.size()},
                 {"rotation_seconds", session.rotation_seconds}}};
        sessions_[session.session_id] = std::move(session);
        return r;
    });
}

Reply SurveyService::get_slot(const std::string& session_id, std::size_t index) {
    return guarded([&]() -> Reply {
        const auto session = find_session(session_id);
        if (!session) return fail(404, "not_found", "unknown session");
        if (index >= session->slots.size()) return fail(404, "not_found", "slot index out of range");
        const auto& item = pool_.at(pool_index_.at(session->slots[index]));
        // Blinded payload: report text only, never its source.
        return {200,
                {{"pair_id", item.pair_id},
                 {"image_url", "/media/" + item.image_ref},
                 {"report_text", reportgen::render_report(item.report)},
                 {"layout", survey::to_string(session->layout[index])},
                 {"deadline", session->deadline(index)},
                 {"slot_index", index},
                 {"slot_count", session->slots.size()}}};
    });
}

Reply SurveyService::post_response(const std::string& session_id, const nlohmann::json& body) {
    return guarded([&]() -> Reply {
        const auto session = find_session(session_id);
        if (!session) return fail(404, "not_found", "unknown session");
        if (!body.is_object()) return fail(400, "validation", "expected a JSON object");
        if (body.contains("session_id") && body["session_id"] != session_id) {
            return fail(400, "validation", "session_id in body does not match the route");
        }
        survey::ResponseRecord r;
        r.session_id = session_id;
        r.pair_id = body.at("pair_id").get<std::string>();
        r.q1_clarity = body.at("q1_clarity").get<int>();
        r.q2_ai_belief = body.at("q2_ai_belief").get<bool>();
        r.q3_trust = body.at("q3_trust").get<int>();
        r.q5_flow = body.at("q5_flow").get<int>();
        if (body.contains("comment") && !body["comment"].is_null()) r.comment = body["comment"].get<std::string>();
        r.submitted_at = clock_();
        survey::record_response(*session, r, log_);
        return {201, {{"status", "recorded"}, {"pair_id", r.pair_id}}};
    });
}

Reply SurveyService::aggregate(const std::optional<std::string>& secret) {
    if (config_.admin_secret.empty()) return fail(403, "forbidden", "operator endpoints are disabled");
    if (!secret || *secret != config_.admin_secret) return fail(401, "unauthorized", "operator secret required");
    return guarded([&]() -> Reply {
        const auto responses = log_.snapshot();
        const auto truths = truths_of(pool_);
        const auto agg = survey::aggregate_likert(responses, truths);
        const auto acc = survey::detection_accuracy(responses, truths);
        nlohmann::json detection = nlohmann::json::object();
        for (const auto& [src, a] : acc) {
            detection[std::string(reportgen::to_string(src))] = {
                {"correct", a.correct}, {"n", a.n}, {"percent", a.percent()}};
        }
        return {200,
                {{"responses", responses.size()},
                 {"table1", survey::table1_json(agg)},
                 {"table2", survey::table2_json(agg)},
                 {"detection_accuracy", detection}}};
    });
}

}  // namespace cxr::service
