// Serial reference evaluation. Straight loops over match_detections; kept as
// the ground truth for compute_metrics and as the benchmark baseline.

#include <algorithm>

#include "cxr/detections.hpp"
#include "metrics_common.hpp"

namespace cxr::detections {

namespace {

std::vector<DetectionRecord> above(const std::vector<DetectionRecord>& preds, double conf) {
    std::vector<DetectionRecord> out;
    for (const auto& p : preds) {
        if (p.confidence >= conf) out.push_back(p);
    }
    return out;
}

}  // namespace

DetectionMetrics compute_metrics_reference(const std::vector<ImageLabels>& images, const ClassRegistry& registry,
                                           double conf_threshold_for_confusion) {
    detail::validate_inputs(images, registry, conf_threshold_for_confusion);
    const std::size_t nc = registry.count();

    DetectionMetrics m;
    m.class_count = nc;
    m.confidence_threshold = conf_threshold_for_confusion;
    m.gt_count = detail::count_ground_truth(images, nc);
    m.pr_curves.assign(nc, {});

    const auto thresholds = coco_iou_thresholds();
    std::vector<std::vector<double>> ap(thresholds.size(), std::vector<double>(nc, 0.0));
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::vector<std::vector<detail::RankedHit>> per_class(nc);
        for (const auto& img : images) {
            const auto match = match_detections(img.preds, img.gts, thresholds[t]);
            for (std::size_t i = 0; i < img.preds.size(); ++i) {
                per_class[static_cast<std::size_t>(img.preds[i].class_id)].push_back(
                    {img.preds[i].confidence, match.pred_to_gt[i] >= 0});
            }
        }
        for (std::size_t c = 0; c < nc; ++c) {
            auto& list = per_class[c];
            std::stable_sort(list.begin(), list.end(),
                             [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
            std::vector<bool> hits;
            for (const auto& h : list) hits.push_back(h.hit);
            ap[t][c] = average_precision(hits, m.gt_count[c], t == 0 ? &m.pr_curves[c] : nullptr);
        }
    }
    detail::fill_average_precision(m, ap);

    // operating point at the confidence threshold
    const std::size_t bg = nc;
    m.confusion.assign(nc + 1, std::vector<double>(nc + 1, 0.0));
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& img : images) {
        const auto kept = above(img.preds, conf_threshold_for_confusion);

        const auto exclusive = match_detections(kept, img.gts, kConfusionIou, MatchMode::class_exclusive);
        tp += exclusive.true_positives();
        fp += exclusive.false_positives();
        fn += exclusive.false_negatives();

        const auto agnostic = match_detections(kept, img.gts, kConfusionIou, MatchMode::class_agnostic);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const auto pc = static_cast<std::size_t>(kept[i].class_id);
            const int g = agnostic.pred_to_gt[i];
            const std::size_t row = g >= 0 ? static_cast<std::size_t>(img.gts[static_cast<std::size_t>(g)].class_id) : bg;
            m.confusion[row][pc] += 1.0;
        }
        for (std::size_t j = 0; j < img.gts.size(); ++j) {
            if (!agnostic.gt_matched[j]) m.confusion[static_cast<std::size_t>(img.gts[j].class_id)][bg] += 1.0;
        }
    }
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    detail::normalize_confusion(m);
    return m;
}

}  // namespace cxr::detections
