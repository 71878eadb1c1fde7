#include <sstream>

#include "cxr/detections.hpp"

namespace cxr::detections {

nlohmann::json metrics_to_json(const DetectionMetrics& m, const ClassRegistry& registry) {
    using nlohmann::json;
    json classes = json::array();
    for (std::size_t c = 0; c < m.class_count; ++c) {
        json pr = json::array();
        for (const auto& p : m.pr_curves[c]) pr.push_back({p.recall, p.precision});
        const bool present = m.gt_count[c] > 0;
        classes.push_back({
            {"class_id", c},
            {"name", registry.name(static_cast<int>(c))},
            {"gt_count", m.gt_count[c]},
            {"ap50", present ? json(m.per_class_ap50[c]) : json(nullptr)},
            {"ap50_95", present ? json(m.per_class_ap5095[c]) : json(nullptr)},
            {"pr_curve", std::move(pr)},
        });
    }
    return {
        {"map50", m.map50},
        {"map50_95", m.map5095},
        {"precision", m.precision},
        {"recall", m.recall},
        {"confidence_threshold", m.confidence_threshold},
        {"iou_thresholds", coco_iou_thresholds()},
        {"classes", std::move(classes)},
        {"confusion", m.confusion},
        {"confusion_normalized", m.confusion_normalized},
    };
}

std::string confusion_to_csv(const std::vector<std::vector<double>>& matrix, const ClassRegistry& registry) {
    auto label = [&](std::size_t i) {
        return i < registry.count() ? registry.name(static_cast<int>(i)) : std::string("background");
    };
    auto quoted = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    std::ostringstream out;
    out.precision(17);
    out << "gt\\pred";
    for (std::size_t c = 0; c < matrix.size(); ++c) out << ',' << quoted(label(c));
    out << '\n';
    for (std::size_t r = 0; r < matrix.size(); ++r) {
        out << quoted(label(r));
        for (double v : matrix[r]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

}  // namespace cxr::detections
