#include <algorithm>
#include <cmath>
#include <numeric>

#include "cxr/detections.hpp"
#include "cxr/errors.hpp"

namespace cxr::detections {

BoundingBox::Corners BoundingBox::corners() const {
    return {std::max(0.0, cx - w / 2), std::max(0.0, cy - h / 2), std::min(1.0, cx + w / 2),
            std::min(1.0, cy + h / 2)};
}

double BoundingBox::area() const {
    const auto c = corners();
    return std::max(0.0, c.x2 - c.x1) * std::max(0.0, c.y2 - c.y1);
}

bool BoundingBox::valid() const {
    for (double v : {cx, cy, w, h}) {
        if (!std::isfinite(v)) return false;
    }
    return cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 && w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const double iw = std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1);
    const double ih = std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::size_t ImageMatch::true_positives() const {
    return static_cast<std::size_t>(std::count_if(pred_to_gt.begin(), pred_to_gt.end(), [](int g) { return g >= 0; }));
}

std::size_t ImageMatch::false_negatives() const {
    return static_cast<std::size_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
}

ImageMatch match_detections(const std::vector<DetectionRecord>& preds, const std::vector<GroundTruthBox>& gts,
                            double iou_threshold, MatchMode mode) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw ContractError("IoU threshold must lie in (0, 1)");
    }
    const std::string* image = nullptr;
    auto check_image = [&](const std::string& id) {
        if (!image) image = &id;
        else if (*image != id) throw ContractError("match_detections given records from images '" + *image +
                                                   "' and '" + id + "'");
    };
    for (const auto& p : preds) check_image(p.image_id);
    for (const auto& g : gts) check_image(g.image_id);

    ImageMatch m;
    m.pred_to_gt.assign(preds.size(), -1);
    m.gt_matched.assign(gts.size(), false);

    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].confidence > preds[b].confidence; });

    for (std::size_t pi : order) {
        const auto& p = preds[pi];
        int best = -1;
        double best_iou = iou_threshold;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (m.gt_matched[gi]) continue;
            if (mode == MatchMode::class_exclusive && gts[gi].class_id != p.class_id) continue;
            const double v = iou(p.box, gts[gi].box);
            if (v >= best_iou && (best < 0 || v > best_iou)) {
                best = static_cast<int>(gi);
                best_iou = v;
            }
        }
        if (best >= 0) {
            m.pred_to_gt[pi] = best;
            m.gt_matched[static_cast<std::size_t>(best)] = true;
        }
    }
    return m;
}

}  // namespace cxr::detections
