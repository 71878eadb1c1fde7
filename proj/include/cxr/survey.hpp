#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cxr/reportgen.hpp"

namespace cxr::survey {

using reportgen::RadiologyReport;
using reportgen::ReportSource;

/// Unix seconds.
using Timestamp = std::int64_t;

struct SurveyItem {
    std::string pair_id;
    std::string image_ref;
    RadiologyReport report;  ///< report.source is never shown to participants
};

enum class Layout { image_left, image_right };
std::string_view to_string(Layout l);

inline constexpr int kDefaultRotationSeconds = 60;

struct SurveySession {
    std::string session_id;
    std::string participant_id;
    std::vector<std::string> slots;  ///< pair ids, distinct
    std::vector<Layout> layout;      ///< alternates, starting image_left
    int rotation_seconds = kDefaultRotationSeconds;
    Timestamp created_at = 0;

    /// created_at + (index + 1) * rotation_seconds.
    Timestamp deadline(std::size_t index) const;
    bool has_pair(const std::string& pair_id) const;
};

/// Draws k distinct items uniformly without replacement using `seed`.
/// Same inputs give the same session. Throws ValidationError when k < 2,
/// the pool is smaller than k, pool pair ids repeat, or rotation_seconds <= 0.
SurveySession create_session(std::string session_id, std::string participant_id, std::span<const SurveyItem> pool,
                             std::size_t k, std::uint64_t seed, int rotation_seconds = kDefaultRotationSeconds,
                             Timestamp created_at = 0);

/// One participant's ratings of one pair. Likert values are 1..5
/// (Strongly Disagree = 1 ... Strongly Agree = 5). Field names keep the
/// questionnaire numbering Q1/Q2/Q3/Q5.
struct ResponseRecord {
    std::string session_id;
    std::string pair_id;
    int q1_clarity = 0;
    bool q2_ai_belief = false;  ///< "I believe the report was written by an AI"
    int q3_trust = 0;
    int q5_flow = 0;
    std::optional<std::string> comment;
    Timestamp submitted_at = 0;
};

void to_json(nlohmann::json& j, const ResponseRecord& r);
void from_json(const nlohmann::json& j, ResponseRecord& r);
void to_json(nlohmann::json& j, const SurveySession& s);
void from_json(const nlohmann::json& j, SurveySession& s);

/// Throws ValidationError for a Likert value outside 1..5.
void validate_likert(const ResponseRecord& r);

/// Append-only response log, one JSON document per line. Appends are
/// serialized and flushed to disk before they are acknowledged; duplicate
/// (session_id, pair_id) keys are rejected atomically with the append.
class ResponseLog {
public:
    /// Opens (and replays) the log at `path`, creating it if absent. A torn
    /// final line from an interrupted write is dropped.
    explicit ResponseLog(std::filesystem::path path);
    /// Memory-only log.
    ResponseLog();
    ~ResponseLog();
    ResponseLog(const ResponseLog&) = delete;
    ResponseLog& operator=(const ResponseLog&) = delete;

    /// Throws ConflictError if the key is already present.
    void append(const ResponseRecord& record);
    std::vector<ResponseRecord> snapshot() const;
    std::size_t size() const;

private:
    void write_line(const std::string& line);

    mutable std::mutex mu_;
    std::optional<std::filesystem::path> path_;
    std::FILE* file_ = nullptr;
    std::vector<ResponseRecord> records_;
    std::set<std::pair<std::string, std::string>> keys_;
};

/// Validates `resp` against `session` and appends it. Throws ValidationError
/// (session mismatch or Likert range), NotFoundError (pair not in session)
/// or ConflictError (duplicate).
void record_response(const SurveySession& session, const ResponseRecord& resp, ResponseLog& log);

// ---------------------------------------------------------------------------
// Aggregation

enum class Criterion { clarity, trustworthiness, natural_flow, ai_detection };
std::string_view to_string(Criterion c);

struct AggregateRow {
    Criterion criterion = Criterion::clarity;
    ReportSource report_type = ReportSource::ai;
    std::optional<double> mean_score;  ///< absent for ai_detection and empty cells
    double agreement_pct = 0.0;        ///< % rating 4 or 5; detection accuracy for ai_detection
    std::size_t n = 0;
};

/// Counts per Likert level; counts[0] is Strongly Disagree (1), counts[4]
/// Strongly Agree (5).
struct Distribution {
    Criterion criterion = Criterion::clarity;
    ReportSource report_type = ReportSource::ai;
    std::array<std::size_t, 5> counts{};
    std::size_t n() const;
    double percent(int level) const;  ///< level 1..5
};

struct LikertAggregate {
    std::vector<AggregateRow> rows;            ///< table-1 shape, criterion-major
    std::vector<Distribution> distributions;  ///< table-2 shape, Likert criteria only
};

using Truths = std::map<std::string, ReportSource>;

/// Means, agreement rates and level counts per (criterion, report type),
/// plus AI-detection accuracy rows. Throws ValidationError when a response
/// references a pair missing from `truths`.
LikertAggregate aggregate_likert(std::span<const ResponseRecord> responses, const Truths& truths);

struct DetectionAccuracy {
    std::size_t correct = 0;
    std::size_t n = 0;
    double percent() const { return n ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

/// AI-sourced pairs are correct when flagged as AI; human ones when not.
std::map<ReportSource, DetectionAccuracy> detection_accuracy(std::span<const ResponseRecord> responses,
                                                             const Truths& truths);

nlohmann::json table1_json(const LikertAggregate& agg);
nlohmann::json table2_json(const LikertAggregate& agg);
std::string table1_csv(const LikertAggregate& agg);
std::string table2_csv(const LikertAggregate& agg);

}  // namespace cxr::survey
