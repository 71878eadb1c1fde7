#include <cmath>

#include "cxr/errors.hpp"
#include "metrics_common.hpp"

namespace cxr::detections {

std::vector<double> coco_iou_thresholds() {
    std::vector<double> t;
    for (int i = 10; i <= 19; ++i) t.push_back(i / 20.0);
    return t;
}

double average_precision(const std::vector<bool>& hits, std::size_t gt_total, std::vector<PrPoint>* curve) {
    if (curve) curve->clear();
    if (gt_total == 0) return 0.0;
    const std::size_t n = hits.size();
    std::vector<double> recall(n), precision(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (hits[i]) ++tp;
        recall[i] = static_cast<double>(tp) / static_cast<double>(gt_total);
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    if (curve) {
        curve->reserve(n);
        for (std::size_t i = 0; i < n; ++i) curve->push_back({recall[i], precision[i]});
    }
    // precision envelope: max precision at any rank at or beyond i
    for (std::size_t i = n; i-- > 1;) {
        if (precision[i] > precision[i - 1]) precision[i - 1] = precision[i];
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

namespace detail {

void validate_inputs(const std::vector<ImageLabels>& images, const ClassRegistry& registry, double conf_threshold) {
    if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
        throw ContractError("confidence threshold must lie in [0, 1]");
    }
    std::size_t gts = 0;
    for (const auto& img : images) {
        for (const auto& p : img.preds) {
            if (!registry.contains(p.class_id)) {
                throw ValidationError("prediction in '" + img.image_id + "' has class id " +
                                      std::to_string(p.class_id) + " outside the registry");
            }
        }
        for (const auto& g : img.gts) {
            if (!registry.contains(g.class_id)) {
                throw ValidationError("ground truth in '" + img.image_id + "' has class id " +
                                      std::to_string(g.class_id) + " outside the registry");
            }
        }
        gts += img.gts.size();
    }
    if (gts == 0) throw ValidationError("no ground-truth boxes: recall is undefined");
}

std::vector<std::size_t> count_ground_truth(const std::vector<ImageLabels>& images, std::size_t class_count) {
    std::vector<std::size_t> counts(class_count, 0);
    for (const auto& img : images) {
        for (const auto& g : img.gts) ++counts[static_cast<std::size_t>(g.class_id)];
    }
    return counts;
}

void fill_average_precision(DetectionMetrics& m, const std::vector<std::vector<double>>& ap) {
    const std::size_t nc = m.class_count;
    m.per_class_ap50.assign(nc, 0.0);
    m.per_class_ap5095.assign(nc, 0.0);
    double sum50 = 0.0, sum5095 = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        if (m.gt_count[c] == 0) continue;
        double s = 0.0;
        for (const auto& row : ap) s += row[c];
        m.per_class_ap50[c] = ap.front()[c];
        m.per_class_ap5095[c] = s / static_cast<double>(ap.size());
        sum50 += m.per_class_ap50[c];
        sum5095 += m.per_class_ap5095[c];
        ++present;
    }
    m.map50 = sum50 / static_cast<double>(present);
    m.map5095 = sum5095 / static_cast<double>(present);
}

void normalize_confusion(DetectionMetrics& m) {
    m.confusion_normalized = m.confusion;
    for (auto& row : m.confusion_normalized) {
        double total = 0.0;
        for (double v : row) total += v;
        if (total <= 0.0) continue;
        for (double& v : row) v /= total;
    }
}

}  // namespace detail
}  // namespace cxr::detections
