#include <optional>

#include "../common/text_util.hpp"
#include "cxr/errors.hpp"
#include "cxr/reportgen.hpp"

namespace cxr::reportgen {

namespace {

enum class Header { findings, impression };

struct HeaderHit {
    Header kind;
    std::string_view rest;  ///< text after "HEADER:" on the same line
};

// Markdown heading/emphasis markers around a header are skipped, as in
// "**FINDINGS:**".
std::optional<HeaderHit> match_header(std::string_view line) {
    auto s = text::trim(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '*')) s.remove_prefix(1);
    s = text::trim(s);

    for (auto [word, kind] : {std::pair{std::string_view("findings"), Header::findings},
                              std::pair{std::string_view("impression"), Header::impression}}) {
        if (s.size() < word.size() || text::to_lower(s.substr(0, word.size())) != word) continue;
        auto rest = s.substr(word.size());
        while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
        rest = text::trim(rest);
        if (rest.empty()) return HeaderHit{kind, {}};
        if (rest.front() != ':') continue;
        rest.remove_prefix(1);
        while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
        return HeaderHit{kind, text::trim(rest)};
    }
    return std::nullopt;
}

std::string join_body(std::string_view first, const std::vector<std::string_view>& lines, std::size_t begin,
                      std::size_t end) {
    std::string body(first);
    for (std::size_t i = begin; i < end; ++i) {
        if (!body.empty()) body += '\n';
        body += lines[i];
    }
    return std::string(text::trim(body));
}

}  // namespace

RadiologyReport parse_report(std::string_view content, ReportSource source, std::string report_id) {
    const auto lines = text::split_lines(content);
    std::optional<std::size_t> findings_at, impression_at;
    std::vector<std::pair<std::size_t, HeaderHit>> headers;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto h = match_header(lines[i])) {
            headers.emplace_back(i, *h);
            auto& slot = h->kind == Header::findings ? findings_at : impression_at;
            if (!slot) slot = headers.size() - 1;
        }
    }
    if (!findings_at) throw MissingSectionError("FINDINGS", "report has no FINDINGS section");
    if (!impression_at) throw MissingSectionError("IMPRESSION", "report has no IMPRESSION section");
    if (*impression_at < *findings_at) throw SectionOrderError("IMPRESSION section precedes FINDINGS");

    auto body_of = [&](std::size_t header_index) {
        const auto& [line, hit] = headers[header_index];
        const std::size_t end = header_index + 1 < headers.size() ? headers[header_index + 1].first : lines.size();
        return join_body(hit.rest, lines, line + 1, end);
    };

    RadiologyReport r;
    r.findings_text = body_of(*findings_at);
    r.impression_text = body_of(*impression_at);
    r.source = source;
    r.report_id = std::move(report_id);
    if (r.findings_text.empty()) throw MissingSectionError("FINDINGS", "FINDINGS section is empty");
    if (r.impression_text.empty()) throw MissingSectionError("IMPRESSION", "IMPRESSION section is empty");
    return r;
}

std::string render_report(const RadiologyReport& report) {
    return "FINDINGS:\n" + report.findings_text + "\n\nIMPRESSION:\n" + report.impression_text + "\n";
}

std::string similarity_text(const RadiologyReport& report) {
    return report.findings_text + "\n" + report.impression_text;
}

void to_json(nlohmann::json& j, const RadiologyReport& r) {
    j = {{"report_id", r.report_id},
         {"source", to_string(r.source)},
         {"findings", r.findings_text},
         {"impression", r.impression_text}};
}

}  // namespace cxr::reportgen
