#pragma once

#include <vector>

#include "cxr/detections.hpp"

namespace cxr::detections::detail {

/// One ranked entry of a class's detection list.
struct RankedHit {
    double confidence;
    bool hit;
};

void validate_inputs(const std::vector<ImageLabels>& images, const ClassRegistry& registry,
                     double conf_threshold);

std::vector<std::size_t> count_ground_truth(const std::vector<ImageLabels>& images, std::size_t class_count);

/// ap[t][c] for every threshold t and class c -> per-class and mean fields.
void fill_average_precision(DetectionMetrics& m, const std::vector<std::vector<double>>& ap);

/// Row-normalizes m.confusion into m.confusion_normalized.
void normalize_confusion(DetectionMetrics& m);

}  // namespace cxr::detections::detail
