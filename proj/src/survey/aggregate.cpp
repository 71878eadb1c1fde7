#include <sstream>

#include "../common/text_util.hpp"
#include "cxr/errors.hpp"
#include "cxr/survey.hpp"

namespace cxr::survey {

std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::clarity: return "clarity";
        case Criterion::trustworthiness: return "trustworthiness";
        case Criterion::natural_flow: return "natural_flow";
        case Criterion::ai_detection: return "ai_detection";
    }
    return "clarity";
}

std::size_t Distribution::n() const {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    return total;
}

double Distribution::percent(int level) const {
    const auto total = n();
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(counts.at(static_cast<std::size_t>(level - 1))) / static_cast<double>(total);
}

namespace {

constexpr std::array<Criterion, 3> kLikert = {Criterion::clarity, Criterion::trustworthiness, Criterion::natural_flow};
constexpr std::array<ReportSource, 2> kSources = {ReportSource::ai, ReportSource::human};

int value_for(const ResponseRecord& r, Criterion c) {
    switch (c) {
        case Criterion::clarity: return r.q1_clarity;
        case Criterion::trustworthiness: return r.q3_trust;
        case Criterion::natural_flow: return r.q5_flow;
        case Criterion::ai_detection: break;
    }
    return 0;
}

ReportSource truth_of(const Truths& truths, const std::string& pair_id) {
    auto it = truths.find(pair_id);
    if (it == truths.end()) throw ValidationError("response references unknown pair '" + pair_id + "'");
    return it->second;
}

}  // namespace

std::map<ReportSource, DetectionAccuracy> detection_accuracy(std::span<const ResponseRecord> responses,
                                                             const Truths& truths) {
    std::map<ReportSource, DetectionAccuracy> acc{{ReportSource::ai, {}}, {ReportSource::human, {}}};
    for (const auto& r : responses) {
        const auto src = truth_of(truths, r.pair_id);
        auto& a = acc[src];
        ++a.n;
        if (r.q2_ai_belief == (src == ReportSource::ai)) ++a.correct;
    }
    return acc;
}

LikertAggregate aggregate_likert(std::span<const ResponseRecord> responses, const Truths& truths) {
    LikertAggregate agg;
    for (auto c : kLikert) {
        for (auto s : kSources) agg.distributions.push_back({c, s, {}});
    }
    auto dist = [&](Criterion c, ReportSource s) -> Distribution& {
        for (auto& d : agg.distributions) {
            if (d.criterion == c && d.report_type == s) return d;
        }
        throw ContractError("missing distribution cell");
    };

    for (const auto& r : responses) {
        const auto src = truth_of(truths, r.pair_id);
        validate_likert(r);
        for (auto c : kLikert) ++dist(c, src).counts[static_cast<std::size_t>(value_for(r, c) - 1)];
    }

    for (const auto& d : agg.distributions) {
        AggregateRow row{d.criterion, d.report_type, std::nullopt, 0.0, d.n()};
        if (row.n > 0) {
            std::size_t sum = 0;
            for (std::size_t level = 0; level < 5; ++level) sum += (level + 1) * d.counts[level];
            row.mean_score = static_cast<double>(sum) / static_cast<double>(row.n);
            row.agreement_pct = 100.0 * static_cast<double>(d.counts[3] + d.counts[4]) / static_cast<double>(row.n);
        }
        agg.rows.push_back(row);
    }
    const auto acc = detection_accuracy(responses, truths);
    for (auto s : kSources) {
        const auto& a = acc.at(s);
        agg.rows.push_back({Criterion::ai_detection, s, std::nullopt, a.percent(), a.n});
    }
    return agg;
}

// Presentation rounding: means to two decimals ("3.88/5.0"), percentages to one.

nlohmann::json table1_json(const LikertAggregate& agg) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : agg.rows) {
        nlohmann::json row = {{"criterion", to_string(r.criterion)},
                              {"report_type", reportgen::to_string(r.report_type)},
                              {"mean_score", r.mean_score ? nlohmann::json(*r.mean_score) : nlohmann::json(nullptr)},
                              {"agreement_pct", r.agreement_pct},
                              {"n", r.n},
                              {"mean_display", r.mean_score ? text::fixed(*r.mean_score, 2) + "/5.0" : "-"},
                              {"agreement_display", text::fixed(r.agreement_pct, 1) + "%"}};
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json table2_json(const LikertAggregate& agg) {
    static constexpr std::array<const char*, 5> kLevelNames = {"strongly_disagree", "disagree", "neutral", "agree",
                                                               "strongly_agree"};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& d : agg.distributions) {
        nlohmann::json levels = nlohmann::json::object();
        for (int level = 5; level >= 1; --level) {
            levels[kLevelNames[static_cast<std::size_t>(level - 1)]] = {
                {"count", d.counts[static_cast<std::size_t>(level - 1)]}, {"percent", d.percent(level)}};
        }
        rows.push_back({{"criterion", to_string(d.criterion)},
                        {"report_type", reportgen::to_string(d.report_type)},
                        {"n", d.n()},
                        {"levels", std::move(levels)}});
    }
    return rows;
}

std::string table1_csv(const LikertAggregate& agg) {
    std::ostringstream out;
    out << "criterion,report_type,mean_score,agreement_pct,n\n";
    for (const auto& r : agg.rows) {
        out << to_string(r.criterion) << ',' << reportgen::to_string(r.report_type) << ','
            << (r.mean_score ? text::fixed(*r.mean_score, 2) : "") << ',' << text::fixed(r.agreement_pct, 1) << ','
            << r.n << '\n';
    }
    return out.str();
}

std::string table2_csv(const LikertAggregate& agg) {
    std::ostringstream out;
    out << "criterion,report_type,strongly_agree,agree,neutral,disagree,strongly_disagree,n\n";
    for (const auto& d : agg.distributions) {
        out << to_string(d.criterion) << ',' << reportgen::to_string(d.report_type);
        for (int level = 5; level >= 1; --level) {
            out << ',' << d.counts[static_cast<std::size_t>(level - 1)] << " (" << text::fixed(d.percent(level), 1)
                << "%)";
        }
        out << ',' << d.n() << '\n';
    }
    return out.str();
}

}  // namespace cxr::survey
