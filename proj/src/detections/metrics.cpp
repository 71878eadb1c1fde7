#include <algorithm>
#include <numeric>

#include "cxr/detections.hpp"
#include "metrics_common.hpp"

namespace cxr::detections {

namespace {

/// Per-image state computed once and shared by every IoU threshold.
struct ImageTable {
    std::vector<std::size_t> order;  ///< preds by descending confidence, stable
    std::vector<double> iou;         ///< row-major preds x gts
    std::size_t gt_count = 0;

    double at(std::size_t p, std::size_t g) const { return iou[p * gt_count + g]; }
};

ImageTable build_table(const ImageLabels& img) {
    ImageTable t;
    t.gt_count = img.gts.size();
    t.order.resize(img.preds.size());
    std::iota(t.order.begin(), t.order.end(), 0);
    std::stable_sort(t.order.begin(), t.order.end(), [&](std::size_t a, std::size_t b) {
        return img.preds[a].confidence > img.preds[b].confidence;
    });
    t.iou.resize(img.preds.size() * img.gts.size());
    for (std::size_t p = 0; p < img.preds.size(); ++p) {
        for (std::size_t g = 0; g < img.gts.size(); ++g) t.iou[p * t.gt_count + g] = iou(img.preds[p].box, img.gts[g].box);
    }
    return t;
}

/// Greedy matching over a precomputed IoU table; same rules as
/// match_detections. Only the first `limit` ranked predictions take part.
/// Returns the matched gt index per prediction (-1 when unmatched or skipped).
std::vector<int> greedy_match(const ImageLabels& img, const ImageTable& table, double threshold, bool same_class,
                              std::size_t limit) {
    std::vector<int> pred_to_gt(img.preds.size(), -1);
    std::vector<char> taken(img.gts.size(), 0);
    for (std::size_t k = 0; k < limit; ++k) {
        const std::size_t p = table.order[k];
        int best = -1;
        double best_iou = threshold;
        for (std::size_t g = 0; g < img.gts.size(); ++g) {
            if (taken[g]) continue;
            if (same_class && img.gts[g].class_id != img.preds[p].class_id) continue;
            const double v = table.at(p, g);
            if (v >= best_iou && (best < 0 || v > best_iou)) {
                best = static_cast<int>(g);
                best_iou = v;
            }
        }
        if (best >= 0) {
            pred_to_gt[p] = best;
            taken[static_cast<std::size_t>(best)] = 1;
        }
    }
    return pred_to_gt;
}

struct ClassEntry {
    std::size_t image;
    std::size_t pred;
};

}  // namespace

DetectionMetrics compute_metrics(const std::vector<ImageLabels>& images, const ClassRegistry& registry,
                                 double conf_threshold_for_confusion) {
    detail::validate_inputs(images, registry, conf_threshold_for_confusion);
    const std::size_t nc = registry.count();
    const auto n_img = static_cast<std::ptrdiff_t>(images.size());

    DetectionMetrics m;
    m.class_count = nc;
    m.confidence_threshold = conf_threshold_for_confusion;
    m.gt_count = detail::count_ground_truth(images, nc);
    m.pr_curves.assign(nc, {});

    std::vector<ImageTable> tables(images.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n_img; ++i) tables[static_cast<std::size_t>(i)] = build_table(images[static_cast<std::size_t>(i)]);

    // Ranking per class is independent of the IoU threshold.
    std::vector<std::vector<ClassEntry>> ranking(nc);
    for (std::size_t i = 0; i < images.size(); ++i) {
        for (std::size_t p = 0; p < images[i].preds.size(); ++p) {
            ranking[static_cast<std::size_t>(images[i].preds[p].class_id)].push_back({i, p});
        }
    }
    for (auto& list : ranking) {
        std::stable_sort(list.begin(), list.end(), [&](const ClassEntry& a, const ClassEntry& b) {
            return images[a.image].preds[a.pred].confidence > images[b.image].preds[b.pred].confidence;
        });
    }

    const auto thresholds = coco_iou_thresholds();
    const auto n_thr = static_cast<std::ptrdiff_t>(thresholds.size());

    // matches[t][image][pred]
    std::vector<std::vector<std::vector<int>>> matches(thresholds.size(), std::vector<std::vector<int>>(images.size()));
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n_thr; ++t) {
        for (std::ptrdiff_t i = 0; i < n_img; ++i) {
            const auto ti = static_cast<std::size_t>(t);
            const auto ii = static_cast<std::size_t>(i);
            matches[ti][ii] = greedy_match(images[ii], tables[ii], thresholds[ti], true, images[ii].preds.size());
        }
    }

    std::vector<std::vector<double>> ap(thresholds.size(), std::vector<double>(nc, 0.0));
    const auto n_cls = static_cast<std::ptrdiff_t>(nc);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n_thr; ++t) {
        for (std::ptrdiff_t c = 0; c < n_cls; ++c) {
            const auto ti = static_cast<std::size_t>(t);
            const auto ci = static_cast<std::size_t>(c);
            std::vector<bool> hits;
            hits.reserve(ranking[ci].size());
            for (const auto& e : ranking[ci]) hits.push_back(matches[ti][e.image][e.pred] >= 0);
            ap[ti][ci] = average_precision(hits, m.gt_count[ci], ti == 0 ? &m.pr_curves[ci] : nullptr);
        }
    }
    detail::fill_average_precision(m, ap);

    // Greedy matching visits predictions in confidence order, so matches among
    // the predictions above the threshold do not depend on those below it.
    const std::size_t bg = nc;
    struct Local {
        std::size_t tp = 0, fp = 0, fn = 0;
        std::vector<std::vector<double>> confusion;
    };
    std::vector<Local> local(images.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n_img; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const auto& img = images[ii];
        const auto& table = tables[ii];
        auto& out = local[ii];
        out.confusion.assign(nc + 1, std::vector<double>(nc + 1, 0.0));

        std::size_t kept = 0;
        while (kept < table.order.size() && img.preds[table.order[kept]].confidence >= conf_threshold_for_confusion) {
            ++kept;
        }
        for (std::size_t k = 0; k < kept; ++k) {
            if (matches[0][ii][table.order[k]] >= 0) ++out.tp;
            else ++out.fp;
        }
        out.fn = img.gts.size() - out.tp;

        const auto agnostic = greedy_match(img, table, kConfusionIou, false, kept);
        std::vector<char> gt_hit(img.gts.size(), 0);
        for (std::size_t k = 0; k < kept; ++k) {
            const std::size_t p = table.order[k];
            const int g = agnostic[p];
            std::size_t row = bg;
            if (g >= 0) {
                row = static_cast<std::size_t>(img.gts[static_cast<std::size_t>(g)].class_id);
                gt_hit[static_cast<std::size_t>(g)] = 1;
            }
            out.confusion[row][static_cast<std::size_t>(img.preds[p].class_id)] += 1.0;
        }
        for (std::size_t g = 0; g < img.gts.size(); ++g) {
            if (!gt_hit[g]) out.confusion[static_cast<std::size_t>(img.gts[g].class_id)][bg] += 1.0;
        }
    }

    m.confusion.assign(nc + 1, std::vector<double>(nc + 1, 0.0));
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& l : local) {
        tp += l.tp;
        fp += l.fp;
        fn += l.fn;
        for (std::size_t r = 0; r <= nc; ++r) {
            for (std::size_t c = 0; c <= nc; ++c) m.confusion[r][c] += l.confusion[r][c];
        }
    }
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    detail::normalize_confusion(m);
    return m;
}

}  // namespace cxr::detections
