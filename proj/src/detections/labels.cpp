#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "cxr/detections.hpp"
#include "cxr/errors.hpp"
#include "../common/text_util.hpp"

namespace cxr::detections {

ClassRegistry::ClassRegistry(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw ValidationError("class registry is empty");
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw ValidationError("class registry contains an empty name");
        if (!seen.insert(n).second) throw ValidationError("duplicate class name '" + n + "'");
    }
}

ClassRegistry ClassRegistry::vinbigdata() {
    return ClassRegistry({
        "Aortic enlargement",
        "Atelectasis",
        "Calcification",
        "Cardiomegaly",
        "Consolidation",
        "ILD",
        "Infiltration",
        "Lung Opacity",
        "Nodule/Mass",
        "Other lesion",
        "Pleural effusion",
        "Pleural thickening",
        "Pneumothorax",
        "Pulmonary fibrosis",
    });
}

ClassRegistry ClassRegistry::parse(std::string_view text) {
    std::vector<std::string> names;
    for (auto line : text::split_lines(text)) {
        names.emplace_back(text::trim(line));
    }
    // trailing blank lines are not classes
    while (!names.empty() && names.back().empty()) names.pop_back();
    return ClassRegistry(std::move(names));
}

const std::string& ClassRegistry::name(int class_id) const {
    if (!contains(class_id)) {
        throw ValidationError("class id " + std::to_string(class_id) + " outside registry of " +
                              std::to_string(names_.size()));
    }
    return names_[static_cast<std::size_t>(class_id)];
}

std::optional<int> ClassRegistry::find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<int>(it - names_.begin());
}

namespace {

struct RawLine {
    int class_id;
    BoundingBox box;
    double confidence;
};

double parse_real(std::string_view tok, std::size_t line_no) {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ParseError(line_no, "expected a decimal number, got '" + std::string(tok) + "'");
    }
    return v;
}

int parse_class(std::string_view tok, std::size_t line_no) {
    int v = 0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(line_no, "expected an integer class id, got '" + std::string(tok) + "'");
    }
    return v;
}

template <typename Fn>
void for_each_label_line(std::string_view text, bool with_confidence, const ClassRegistry& registry, Fn&& emit) {
    const std::size_t want = with_confidence ? 6 : 5;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(text)) {
        ++line_no;
        auto toks = text::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != want) {
            throw ParseError(line_no, "expected " + std::to_string(want) + " fields, got " +
                                          std::to_string(toks.size()));
        }
        RawLine r{};
        r.class_id = parse_class(toks[0], line_no);
        r.box = {parse_real(toks[1], line_no), parse_real(toks[2], line_no), parse_real(toks[3], line_no),
                 parse_real(toks[4], line_no)};
        r.confidence = with_confidence ? parse_real(toks[5], line_no) : 1.0;

        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (!registry.contains(r.class_id)) {
            throw ValidationError(where + "class id " + std::to_string(r.class_id) + " outside registry of " +
                                  std::to_string(registry.count()));
        }
        if (!r.box.valid()) throw ValidationError(where + "box coordinates outside [0,1] or zero-sized");
        if (r.confidence < 0.0 || r.confidence > 1.0) throw ValidationError(where + "confidence outside [0,1]");
        emit(r);
    }
}

}  // namespace

std::vector<DetectionRecord> parse_detection_labels(std::string_view text, const std::string& image_id,
                                                    const ClassRegistry& registry) {
    std::vector<DetectionRecord> out;
    for_each_label_line(text, true, registry, [&](const RawLine& r) {
        out.push_back({image_id, r.class_id, r.box, r.confidence});
    });
    return out;
}

std::vector<GroundTruthBox> parse_ground_truth_labels(std::string_view text, const std::string& image_id,
                                                      const ClassRegistry& registry) {
    std::vector<GroundTruthBox> out;
    for_each_label_line(text, false, registry, [&](const RawLine& r) {
        out.push_back({image_id, r.class_id, r.box});
    });
    return out;
}

}  // namespace cxr::detections
