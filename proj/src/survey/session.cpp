#include <algorithm>
#include <numeric>
#include <set>

#include "cxr/errors.hpp"
#include "cxr/random.hpp"
#include "cxr/survey.hpp"

namespace cxr::survey {

std::string_view to_string(Layout l) { return l == Layout::image_left ? "image_left" : "image_right"; }

Timestamp SurveySession::deadline(std::size_t index) const {
    return created_at + static_cast<Timestamp>(index + 1) * rotation_seconds;
}

bool SurveySession::has_pair(const std::string& pair_id) const {
    return std::find(slots.begin(), slots.end(), pair_id) != slots.end();
}

SurveySession create_session(std::string session_id, std::string participant_id, std::span<const SurveyItem> pool,
                             std::size_t k, std::uint64_t seed, int rotation_seconds, Timestamp created_at) {
    if (k < 2) throw ValidationError("a session needs at least two slots");
    if (pool.size() < k) {
        throw ValidationError("pool of " + std::to_string(pool.size()) + " items cannot fill " + std::to_string(k) +
                              " slots");
    }
    if (rotation_seconds <= 0) throw ValidationError("rotation_seconds must be positive");
    std::set<std::string> ids;
    for (const auto& item : pool) {
        if (!ids.insert(item.pair_id).second) throw ValidationError("duplicate pair id '" + item.pair_id + "' in pool");
    }

    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    SeededRng rng(seed);
    partial_shuffle(std::span<std::size_t>(idx), k, rng);

    SurveySession s;
    s.session_id = std::move(session_id);
    s.participant_id = std::move(participant_id);
    s.rotation_seconds = rotation_seconds;
    s.created_at = created_at;
    for (std::size_t i = 0; i < k; ++i) {
        s.slots.push_back(pool[idx[i]].pair_id);
        s.layout.push_back(i % 2 == 0 ? Layout::image_left : Layout::image_right);
    }
    return s;
}

void to_json(nlohmann::json& j, const SurveySession& s) {
    std::vector<std::string> layout;
    for (auto l : s.layout) layout.emplace_back(to_string(l));
    j = {{"session_id", s.session_id},
         {"participant_id", s.participant_id},
         {"slots", s.slots},
         {"layout", layout},
         {"rotation_seconds", s.rotation_seconds},
         {"created_at", s.created_at}};
}

void from_json(const nlohmann::json& j, SurveySession& s) {
    s.session_id = j.at("session_id").get<std::string>();
    s.participant_id = j.at("participant_id").get<std::string>();
    s.slots = j.at("slots").get<std::vector<std::string>>();
    s.layout.clear();
    for (const auto& l : j.at("layout")) {
        const auto v = l.get<std::string>();
        if (v == "image_left") s.layout.push_back(Layout::image_left);
        else if (v == "image_right") s.layout.push_back(Layout::image_right);
        else throw ValidationError("unknown layout '" + v + "'");
    }
    s.rotation_seconds = j.at("rotation_seconds").get<int>();
    s.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(nlohmann::json& j, const ResponseRecord& r) {
    j = {{"session_id", r.session_id}, {"pair_id", r.pair_id},   {"q1_clarity", r.q1_clarity},
         {"q2_ai_belief", r.q2_ai_belief}, {"q3_trust", r.q3_trust}, {"q5_flow", r.q5_flow},
         {"submitted_at", r.submitted_at}};
    if (r.comment) j["comment"] = *r.comment;
}

void from_json(const nlohmann::json& j, ResponseRecord& r) {
    r.session_id = j.at("session_id").get<std::string>();
    r.pair_id = j.at("pair_id").get<std::string>();
    r.q1_clarity = j.at("q1_clarity").get<int>();
    r.q2_ai_belief = j.at("q2_ai_belief").get<bool>();
    r.q3_trust = j.at("q3_trust").get<int>();
    r.q5_flow = j.at("q5_flow").get<int>();
    r.comment.reset();
    if (j.contains("comment") && !j["comment"].is_null()) r.comment = j["comment"].get<std::string>();
    r.submitted_at = j.value("submitted_at", Timestamp{0});
}

void validate_likert(const ResponseRecord& r) {
    for (auto [name, v] : {std::pair{"q1_clarity", r.q1_clarity}, std::pair{"q3_trust", r.q3_trust},
                           std::pair{"q5_flow", r.q5_flow}}) {
        if (v < 1 || v > 5) throw ValidationError(std::string(name) + " must be 1..5, got " + std::to_string(v));
    }
}

void record_response(const SurveySession& session, const ResponseRecord& resp, ResponseLog& log) {
    if (resp.session_id != session.session_id) throw ValidationError("response belongs to a different session");
    if (!session.has_pair(resp.pair_id)) {
        throw NotFoundError("pair '" + resp.pair_id + "' is not part of session " + session.session_id);
    }
    validate_likert(resp);
    log.append(resp);
}

}  // namespace cxr::survey
