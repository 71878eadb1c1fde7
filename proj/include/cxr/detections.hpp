#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cxr::detections {

/// Normalized YOLO-style box: centre and size as fractions of the image.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    struct Corners {
        double x1, y1, x2, y2;
    };

    /// Corner form, clamped to the unit square.
    Corners corners() const;
    double area() const;
    /// 0 <= cx,cy <= 1 and 0 < w,h <= 1 (all finite).
    bool valid() const;
};

struct DetectionRecord {
    std::string image_id;
    int class_id = 0;
    BoundingBox box;
    double confidence = 0.0;
};

struct GroundTruthBox {
    std::string image_id;
    int class_id = 0;
    BoundingBox box;
};

class ClassRegistry {
public:
    explicit ClassRegistry(std::vector<std::string> names);

    /// The 14 VinBigData thoracic abnormality classes in dataset order.
    static ClassRegistry vinbigdata();
    /// One class name per line; line number (0-based) is the class id.
    static ClassRegistry parse(std::string_view text);

    std::size_t count() const noexcept { return names_.size(); }
    bool contains(int class_id) const noexcept {
        return class_id >= 0 && static_cast<std::size_t>(class_id) < names_.size();
    }
    const std::string& name(int class_id) const;
    std::optional<int> find(std::string_view name) const;
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Label files

/// `class_id cx cy w h confidence` per non-empty line. Lines are validated
/// against `registry`; image_id is stamped on every record.
std::vector<DetectionRecord> parse_detection_labels(std::string_view text, const std::string& image_id,
                                                    const ClassRegistry& registry);

/// `class_id cx cy w h` per non-empty line.
std::vector<GroundTruthBox> parse_ground_truth_labels(std::string_view text, const std::string& image_id,
                                                      const ClassRegistry& registry);

// ---------------------------------------------------------------------------
// Geometry and matching

/// Intersection over union in clamped corner form. Zero-area boxes give 0.
double iou(const BoundingBox& a, const BoundingBox& b);

enum class MatchMode {
    class_exclusive,  ///< predictions only match ground truth of the same class
    class_agnostic,   ///< any class; used for the confusion matrix
};

/// Result of matching one image. pred_to_gt[i] indexes into the gts passed
/// in, or is -1 (background). gt_matched[j] tells whether gt j was taken.
struct ImageMatch {
    std::vector<int> pred_to_gt;
    std::vector<bool> gt_matched;

    std::size_t true_positives() const;
    std::size_t false_positives() const { return pred_to_gt.size() - true_positives(); }
    std::size_t false_negatives() const;
};

/// Greedy matching: predictions in descending confidence (ties by input
/// order) each take the unmatched eligible ground truth of highest IoU
/// >= iou_threshold (ties by input order). All records must share one
/// image_id and 0 < iou_threshold < 1, otherwise ContractError.
ImageMatch match_detections(const std::vector<DetectionRecord>& preds, const std::vector<GroundTruthBox>& gts,
                            double iou_threshold, MatchMode mode = MatchMode::class_exclusive);

// ---------------------------------------------------------------------------
// Metrics

/// One image's predictions and ground truth.
struct ImageLabels {
    std::string image_id;
    std::vector<DetectionRecord> preds;
    std::vector<GroundTruthBox> gts;
};

struct PrPoint {
    double recall;
    double precision;
};

struct DetectionMetrics {
    std::size_t class_count = 0;
    std::vector<std::size_t> gt_count;     ///< per class
    std::vector<double> per_class_ap50;    ///< 0 for classes without ground truth
    std::vector<double> per_class_ap5095;  ///< 0 for classes without ground truth
    double map50 = 0.0;
    double map5095 = 0.0;
    double precision = 0.0;  ///< micro-averaged at confidence_threshold, IoU 0.5
    double recall = 0.0;
    double confidence_threshold = 0.0;
    /// (count+1)x(count+1), rows = ground-truth class, cols = predicted class;
    /// the last row/column is background.
    std::vector<std::vector<double>> confusion;
    std::vector<std::vector<double>> confusion_normalized;
    std::vector<std::vector<PrPoint>> pr_curves;  ///< per class at IoU 0.5
};

/// IoU thresholds 0.50, 0.55, ..., 0.95 used for mAP@0.5:0.95.
std::vector<double> coco_iou_thresholds();

/// IoU at which a prediction and ground truth pair up in the confusion matrix.
inline constexpr double kConfusionIou = 0.5;

/// All-point interpolated AP of a confidence-ranked hit list.
/// `hits` must already be in ranking order.
double average_precision(const std::vector<bool>& hits, std::size_t gt_total,
                         std::vector<PrPoint>* curve = nullptr);

/// Full evaluation. Per-image IoU tables and the per (threshold, class) AP
/// sweeps are computed in parallel (OpenMP). Throws ValidationError when there
/// is no ground truth at all or class ids fall outside the registry.
DetectionMetrics compute_metrics(const std::vector<ImageLabels>& images, const ClassRegistry& registry,
                                 double conf_threshold_for_confusion);

/// Serial reference for compute_metrics: re-runs match_detections per image
/// and threshold instead of sharing IoU tables. Results must be identical.
DetectionMetrics compute_metrics_reference(const std::vector<ImageLabels>& images, const ClassRegistry& registry,
                                           double conf_threshold_for_confusion);

/// Metrics as JSON. Classes without ground truth report AP as null.
nlohmann::json metrics_to_json(const DetectionMetrics& m, const ClassRegistry& registry);

/// Confusion matrix as CSV with a header row of class names plus "background".
std::string confusion_to_csv(const std::vector<std::vector<double>>& matrix, const ClassRegistry& registry);

// ---------------------------------------------------------------------------
// Dataset splitting

struct DatasetSplit {
    std::vector<std::string> train;  ///< patient ids, sorted
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::array<double, 3> ratios{};

    /// Split name ("train" / "val" / "test") holding a patient, if any.
    std::optional<std::string> split_of(const std::string& patient_id) const;
};

/// Patient-grouped split. Patients are shuffled with the seed, then cut into
/// three contiguous runs sized by largest-remainder rounding of ratio * N.
DatasetSplit split_patientwise(const std::map<std::string, std::string>& patient_of_image,
                               const std::array<double, 3>& ratios, std::uint64_t seed);

nlohmann::json split_to_json(const DatasetSplit& split, const std::map<std::string, std::string>& patient_of_image);

}  // namespace cxr::detections
