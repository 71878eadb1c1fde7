#include "cxr/anatomy.hpp"

#include "../common/text_util.hpp"
#include "cxr/errors.hpp"

namespace cxr::anatomy {

std::string_view to_string(Orientation o) {
    return o == Orientation::image_naive ? "image_naive" : "viewer_oriented";
}

std::string_view to_string(Laterality l) {
    switch (l) {
        case Laterality::left: return "left";
        case Laterality::right: return "right";
        case Laterality::midline: return "midline";
    }
    return "midline";
}

std::string_view to_string(VerticalZone z) {
    switch (z) {
        case VerticalZone::upper: return "upper";
        case VerticalZone::middle: return "middle";
        case VerticalZone::lower: return "lower";
        case VerticalZone::basal: return "basal";
    }
    return "middle";
}

Orientation parse_orientation(std::string_view s) {
    if (s == "image_naive" || s == "image") return Orientation::image_naive;
    if (s == "viewer_oriented" || s == "viewer") return Orientation::viewer_oriented;
    throw ValidationError("unknown orientation '" + std::string(s) + "'");
}

Laterality parse_laterality(std::string_view s) {
    if (s == "left") return Laterality::left;
    if (s == "right") return Laterality::right;
    if (s == "midline") return Laterality::midline;
    throw ValidationError("unknown laterality '" + std::string(s) + "'");
}

VerticalZone parse_zone(std::string_view s) {
    if (s == "upper") return VerticalZone::upper;
    if (s == "middle") return VerticalZone::middle;
    if (s == "lower") return VerticalZone::lower;
    if (s == "basal") return VerticalZone::basal;
    throw ValidationError("unknown vertical zone '" + std::string(s) + "'");
}

VerticalZone vertical_zone(const BoundingBox& box) {
    // cy * 3 avoids comparing against the inexact 1/3 and 2/3
    const double scaled = box.cy * 3.0;
    if (scaled < 1.0) return VerticalZone::upper;
    if (scaled < 2.0) return VerticalZone::middle;
    return VerticalZone::lower;
}

Laterality laterality(const BoundingBox& box, Orientation convention) {
    Laterality image_side = Laterality::midline;
    if (box.cx < 0.5 - kMidlineHalfWidth) image_side = Laterality::left;
    else if (box.cx > 0.5 + kMidlineHalfWidth) image_side = Laterality::right;

    if (convention == Orientation::image_naive || image_side == Laterality::midline) return image_side;
    return image_side == Laterality::left ? Laterality::right : Laterality::left;
}

ZoneOverrides ZoneOverrides::defaults() {
    return ZoneOverrides({{"Pleural effusion", VerticalZone::basal}});
}

ZoneOverrides ZoneOverrides::parse(std::string_view content) {
    std::map<std::string, VerticalZone> table;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError(line_no, "expected class_name<TAB>zone");
        const std::string name(text::trim(line.substr(0, tab)));
        if (name.empty()) throw ParseError(line_no, "empty class name");
        try {
            table[name] = parse_zone(text::trim(line.substr(tab + 1)));
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return ZoneOverrides(std::move(table));
}

std::optional<VerticalZone> ZoneOverrides::lookup(const std::string& class_name) const {
    auto it = table_.find(class_name);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

StructuredFinding to_structured_finding(const detections::DetectionRecord& det,
                                        const detections::ClassRegistry& registry, Orientation convention,
                                        bool anatomy_aware, const ZoneOverrides& overrides) {
    StructuredFinding f;
    f.class_name = registry.name(det.class_id);
    f.class_id = det.class_id;
    f.laterality = laterality(det.box, convention);
    f.vertical_zone = vertical_zone(det.box);
    f.confidence = det.confidence;
    f.source_box = det.box;
    if (anatomy_aware) {
        if (auto forced = overrides.lookup(f.class_name)) f.vertical_zone = *forced;
    }
    return f;
}

void to_json(nlohmann::json& j, const StructuredFinding& f) {
    j = {
        {"class_name", f.class_name},
        {"class_id", f.class_id},
        {"laterality", to_string(f.laterality)},
        {"vertical_zone", to_string(f.vertical_zone)},
        {"confidence", f.confidence},
        {"source_box", {{"cx", f.source_box.cx}, {"cy", f.source_box.cy}, {"w", f.source_box.w}, {"h", f.source_box.h}}},
    };
}

void from_json(const nlohmann::json& j, StructuredFinding& f) {
    f.class_name = j.at("class_name").get<std::string>();
    if (f.class_name.empty()) throw ValidationError("finding has an empty class_name");
    f.class_id = j.value("class_id", 0);
    f.laterality = parse_laterality(j.at("laterality").get<std::string>());
    f.vertical_zone = parse_zone(j.at("vertical_zone").get<std::string>());
    f.confidence = j.at("confidence").get<double>();
    if (f.confidence < 0.0 || f.confidence > 1.0) throw ValidationError("finding confidence outside [0,1]");
    if (j.contains("source_box")) {
        const auto& b = j["source_box"];
        f.source_box = {b.at("cx").get<double>(), b.at("cy").get<double>(), b.at("w").get<double>(),
                        b.at("h").get<double>()};
    }
}

}  // namespace cxr::anatomy
