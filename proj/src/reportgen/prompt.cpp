#include <algorithm>
#include <sstream>

#include "../common/text_util.hpp"
#include "cxr/errors.hpp"
#include "cxr/reportgen.hpp"

namespace cxr::reportgen {

std::string_view to_string(PromptStyle s) { return s == PromptStyle::verbose ? "verbose" : "concise"; }
std::string_view to_string(ReportSource s) { return s == ReportSource::ai ? "ai" : "human"; }

PromptStyle parse_style(std::string_view s) {
    if (s == "verbose") return PromptStyle::verbose;
    if (s == "concise") return PromptStyle::concise;
    throw ValidationError("unknown prompt style '" + std::string(s) + "'");
}

ReportSource parse_source(std::string_view s) {
    if (s == "ai") return ReportSource::ai;
    if (s == "human") return ReportSource::human;
    throw ValidationError("unknown report source '" + std::string(s) + "'");
}

std::vector<StructuredFinding> ordered(std::vector<StructuredFinding> findings) {
    std::stable_sort(findings.begin(), findings.end(), [](const StructuredFinding& a, const StructuredFinding& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.class_id < b.class_id;
    });
    return findings;
}

std::string build_prompt(const std::vector<StructuredFinding>& findings, PromptStyle style) {
    std::ostringstream p;
    p << "You are a radiologist writing a chest X-ray report from object-detector output.\n"
      << "Write the report in two sections headed \"FINDINGS:\" and \"IMPRESSION:\".\n"
      << "Detected abnormalities:\n";
    const auto sorted = ordered(findings);
    if (sorted.empty()) {
        p << "No abnormalities detected.\n";
    }
    for (const auto& f : sorted) {
        p << "- " << f.class_name << ", " << anatomy::to_string(f.laterality) << ' '
          << anatomy::to_string(f.vertical_zone) << ", confidence " << text::fixed(f.confidence, 2) << '\n';
    }
    if (style == PromptStyle::concise) {
        p << kConciseInstruction << '\n';
    } else {
        p << "Describe the heart, mediastinum, lungs and pleura, then give the abnormal findings as a numbered "
             "IMPRESSION list.\n";
    }
    return p.str();
}

}  // namespace cxr::reportgen
