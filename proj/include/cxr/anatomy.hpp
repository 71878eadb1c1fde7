#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cxr/detections.hpp"

namespace cxr::anatomy {

using detections::BoundingBox;

/// How image x-coordinates map to the patient's left/right.
enum class Orientation {
    image_naive,      ///< image-left is called "left"
    viewer_oriented,  ///< frontal film: the patient's right is on the image's left
};

enum class Laterality { left, right, midline };

/// Ordered top to bottom; `basal` only comes from a pathology override.
enum class VerticalZone { upper, middle, lower, basal };

std::string_view to_string(Orientation o);
std::string_view to_string(Laterality l);
std::string_view to_string(VerticalZone z);
Orientation parse_orientation(std::string_view s);
Laterality parse_laterality(std::string_view s);
VerticalZone parse_zone(std::string_view s);

/// Half-width of the midline band, as a fraction of image width.
inline constexpr double kMidlineHalfWidth = 0.05;

/// Thirds of image height: [0,1/3) upper, [1/3,2/3) middle, [2/3,1] lower.
VerticalZone vertical_zone(const BoundingBox& box);

Laterality laterality(const BoundingBox& box, Orientation convention);

/// class_name -> forced vertical zone, applied when anatomy-aware mode is on.
class ZoneOverrides {
public:
    ZoneOverrides() = default;
    explicit ZoneOverrides(std::map<std::string, VerticalZone> table) : table_(std::move(table)) {}

    /// Ships one rule: pleural effusion pools at the lung base.
    static ZoneOverrides defaults();
    /// Lines of `class_name<TAB>zone`; blank lines and '#' comments skipped.
    static ZoneOverrides parse(std::string_view text);

    std::optional<VerticalZone> lookup(const std::string& class_name) const;
    std::size_t size() const noexcept { return table_.size(); }

private:
    std::map<std::string, VerticalZone> table_;
};

struct StructuredFinding {
    std::string class_name;
    int class_id = 0;
    Laterality laterality = Laterality::midline;
    VerticalZone vertical_zone = VerticalZone::middle;
    double confidence = 0.0;
    BoundingBox source_box;
};

StructuredFinding to_structured_finding(const detections::DetectionRecord& det,
                                        const detections::ClassRegistry& registry, Orientation convention,
                                        bool anatomy_aware, const ZoneOverrides& overrides = ZoneOverrides::defaults());

void to_json(nlohmann::json& j, const StructuredFinding& f);
void from_json(const nlohmann::json& j, StructuredFinding& f);

}  // namespace cxr::anatomy
