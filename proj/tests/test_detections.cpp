#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "cxr/detections.hpp"
#include "cxr/errors.hpp"
#include "oracles.hpp"

using namespace cxr::detections;

namespace {

ClassRegistry three_classes() { return ClassRegistry({"A", "B", "C"}); }

DetectionRecord det(int cls, BoundingBox b, double conf, std::string img = "i") {
    return {std::move(img), cls, b, conf};
}

GroundTruthBox gt(int cls, BoundingBox b, std::string img = "i") { return {std::move(img), cls, b}; }

}  // namespace

TEST_CASE("registry") {
    const auto reg = ClassRegistry::vinbigdata();
    CHECK(reg.count() == 14);
    CHECK(reg.name(0) == "Aortic enlargement");
    CHECK(reg.name(10) == "Pleural effusion");
    CHECK(reg.name(13) == "Pulmonary fibrosis");
    CHECK(reg.find("Cardiomegaly") == 3);
    CHECK_FALSE(reg.find("Fracture").has_value());
    CHECK_THROWS_AS(reg.name(14), cxr::ValidationError);

    const auto parsed = ClassRegistry::parse("a\nb\r\nc\n\n");
    CHECK(parsed.names() == std::vector<std::string>{"a", "b", "c"});
    CHECK_THROWS_AS(ClassRegistry::parse("a\na\n"), cxr::ValidationError);
    CHECK_THROWS_AS(ClassRegistry::parse(""), cxr::ValidationError);
}

TEST_CASE("label parsing") {
    const auto reg = three_classes();
    const auto preds = parse_detection_labels("0 0.5 0.5 0.2 0.2 0.9\n\n2 0.1 0.9 0.1 0.1 0.3\n", "img7", reg);
    REQUIRE(preds.size() == 2);
    CHECK(preds[0].image_id == "img7");
    CHECK(preds[1].class_id == 2);
    CHECK(preds[1].confidence == doctest::Approx(0.3));

    const auto gts = parse_ground_truth_labels("1 0.5 0.5 0.2 0.2\n", "img7", reg);
    REQUIRE(gts.size() == 1);
    CHECK(gts[0].box.w == doctest::Approx(0.2));

    SUBCASE("field count reports the line") {
        try {
            parse_detection_labels("0 0.5 0.5 0.2 0.2 0.9\n0 0.5 0.5 0.2 0.2\n", "x", reg);
            FAIL("expected ParseError");
        } catch (const cxr::ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    SUBCASE("non-numeric") {
        CHECK_THROWS_AS(parse_ground_truth_labels("0 a 0.5 0.2 0.2\n", "x", reg), cxr::ParseError);
        CHECK_THROWS_AS(parse_ground_truth_labels("0.5 0.5 0.5 0.2 0.2\n", "x", reg), cxr::ParseError);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(parse_ground_truth_labels("3 0.5 0.5 0.2 0.2\n", "x", reg), cxr::ValidationError);
        CHECK_THROWS_AS(parse_ground_truth_labels("-1 0.5 0.5 0.2 0.2\n", "x", reg), cxr::ValidationError);
        CHECK_THROWS_AS(parse_ground_truth_labels("0 1.5 0.5 0.2 0.2\n", "x", reg), cxr::ValidationError);
        CHECK_THROWS_AS(parse_ground_truth_labels("0 0.5 0.5 0 0.2\n", "x", reg), cxr::ValidationError);
        CHECK_THROWS_AS(parse_detection_labels("0 0.5 0.5 0.2 0.2 1.2\n", "x", reg), cxr::ValidationError);
    }
}

TEST_CASE("iou known values") {
    const BoundingBox a{0.5, 0.5, 0.5, 0.5}, b{0.6, 0.6, 0.5, 0.5};
    // intersection 0.4 x 0.4, union 0.25 + 0.25 - 0.16
    CHECK(iou(a, b) == doctest::Approx(8.0 / 17.0).epsilon(1e-12));
    CHECK(oracle::raster_iou(a, b) == doctest::Approx(8.0 / 17.0).epsilon(1e-12));
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, BoundingBox{0.1, 0.1, 0.1, 0.1}) == 0.0);
    // touching edges do not overlap
    CHECK(iou(BoundingBox{0.25, 0.5, 0.5, 0.5}, BoundingBox{0.75, 0.5, 0.5, 0.5}) == 0.0);
    // boxes spilling past the border are clamped first
    CHECK(iou(BoundingBox{0.0, 0.0, 0.4, 0.4}, BoundingBox{0.1, 0.1, 0.2, 0.2}) == doctest::Approx(1.0));
}

TEST_CASE("iou agrees with the raster oracle on lattice boxes") {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto [a, b] = oracle::lattice_pair(rng);
        worst = std::max(worst, std::abs(iou(a, b) - oracle::raster_iou(a, b)));
    }
    CHECK(worst < 2e-3);
}

TEST_CASE("iou lies within the raster discretization interval") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const BoundingBox a{0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng), 0.1 + 0.5 * u(rng), 0.1 + 0.5 * u(rng)};
        const BoundingBox b{a.cx + 0.3 * (u(rng) - 0.5), a.cy + 0.3 * (u(rng) - 0.5), 0.1 + 0.5 * u(rng),
                            0.1 + 0.5 * u(rng)};
        const auto [lo, hi] = oracle::raster_iou_bounds(a, b);
        const double r = oracle::raster_iou(a, b);
        CHECK(r >= lo);
        CHECK(r <= hi);
        CHECK(iou(a, b) >= lo);
        CHECK(iou(a, b) <= hi);
        CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-15));
    }
}

TEST_CASE("greedy matching") {
    const BoundingBox g0{0.3, 0.3, 0.2, 0.2}, g1{0.7, 0.7, 0.2, 0.2};
    const std::vector<GroundTruthBox> gts{gt(0, g0), gt(0, g1)};

    SUBCASE("higher confidence claims first") {
        const std::vector<DetectionRecord> preds{det(0, {0.31, 0.3, 0.2, 0.2}, 0.4), det(0, {0.3, 0.3, 0.2, 0.2}, 0.9)};
        const auto m = match_detections(preds, gts, 0.5);
        CHECK(m.pred_to_gt == std::vector<int>{-1, 0});
        CHECK(m.true_positives() == 1);
        CHECK(m.false_positives() == 1);
        CHECK(m.false_negatives() == 1);
    }
    SUBCASE("equal IoU goes to the earlier ground truth") {
        const std::vector<GroundTruthBox> twins{gt(0, g0), gt(0, g0)};
        const auto m = match_detections({det(0, g0, 0.5)}, twins, 0.5);
        CHECK(m.pred_to_gt == std::vector<int>{0});
    }
    SUBCASE("class exclusive vs agnostic") {
        const std::vector<DetectionRecord> preds{det(1, g0, 0.8)};
        CHECK(match_detections(preds, gts, 0.5).true_positives() == 0);
        CHECK(match_detections(preds, gts, 0.5, MatchMode::class_agnostic).pred_to_gt == std::vector<int>{0});
    }
    SUBCASE("threshold is inclusive") {
        // IoU exactly 0.5: half-overlapping widths of the same box height
        const BoundingBox p{0.3 + 0.2 / 3.0, 0.3, 0.2, 0.2};
        const double v = iou(p, g0);
        CHECK(match_detections({det(0, p, 0.5)}, gts, v).true_positives() == 1);
    }
    SUBCASE("contract") {
        CHECK_THROWS_AS(match_detections({det(0, g0, 0.5, "other")}, gts, 0.5), cxr::ContractError);
        CHECK_THROWS_AS(match_detections({}, gts, 0.0), cxr::ContractError);
        CHECK_THROWS_AS(match_detections({}, gts, 1.0), cxr::ContractError);
    }
}

TEST_CASE("matching conservation on random images") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 300; ++k) {
        for (const auto& img : oracle::random_instance(rng, 1, 6, 3)) {
            for (double thr : coco_iou_thresholds()) {
                const auto m = match_detections(img.preds, img.gts, thr);
                CHECK(m.true_positives() + m.false_positives() == img.preds.size());
                CHECK(m.true_positives() + m.false_negatives() == img.gts.size());
                std::set<int> taken;
                for (std::size_t i = 0; i < m.pred_to_gt.size(); ++i) {
                    const int g = m.pred_to_gt[i];
                    if (g < 0) continue;
                    CHECK(taken.insert(g).second);
                    CHECK(img.gts[static_cast<std::size_t>(g)].class_id == img.preds[i].class_id);
                    CHECK(iou(img.preds[i].box, img.gts[static_cast<std::size_t>(g)].box) >= thr);
                }
            }
        }
    }
}

TEST_CASE("average precision of a hand-ranked list") {
    // hit, miss, hit over 2 ground truths: (0.5, 1), (0.5, 0.5), (1, 2/3)
    std::vector<PrPoint> curve;
    CHECK(average_precision({true, false, true}, 2, &curve) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
    REQUIRE(curve.size() == 3);
    CHECK(curve[1].precision == doctest::Approx(0.5));
    CHECK(average_precision({}, 3) == 0.0);
    CHECK(average_precision({false, false}, 1) == 0.0);
    CHECK(average_precision({true, true}, 4) == doctest::Approx(0.5));
    CHECK(coco_iou_thresholds().size() == 10);
    CHECK(coco_iou_thresholds().back() == doctest::Approx(0.95));
}

TEST_CASE("AP50 equals threshold enumeration on small instances") {
    const auto reg = three_classes();
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int k = 0; k < 1500; ++k) {
        const auto images = oracle::random_instance(rng, 3, 4, 3);
        if (oracle::total_gts(images) == 0) continue;
        const auto m = compute_metrics(images, reg, 0.25);
        for (int c = 0; c < 3; ++c) {
            if (m.gt_count[static_cast<std::size_t>(c)] == 0) continue;
            CHECK(std::abs(m.per_class_ap50[static_cast<std::size_t>(c)] - oracle::brute_force_ap(images, c)) < 1e-9);
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("metrics on a worked example") {
    const auto reg = three_classes();
    const BoundingBox a{0.3, 0.3, 0.2, 0.2}, b{0.7, 0.7, 0.2, 0.2};
    ImageLabels img{"i", {det(0, a, 0.9), det(1, b, 0.8), det(0, {0.5, 0.1, 0.1, 0.1}, 0.1)}, {gt(0, a), gt(2, b)}};
    const auto m = compute_metrics({img}, reg, 0.25);
    CHECK(m.per_class_ap50[0] == doctest::Approx(1.0));
    CHECK(m.per_class_ap50[2] == 0.0);
    CHECK(m.map50 == doctest::Approx(0.5));  // class B has no ground truth and is excluded
    CHECK(m.map5095 == doctest::Approx(0.5));
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(0.5));
    // the class-B box sits on the class-C ground truth
    CHECK(m.confusion[0][0] == 1.0);
    CHECK(m.confusion[2][1] == 1.0);
    CHECK(m.confusion[3][0] == 0.0);  // 0.1 confidence is below the operating point
    CHECK(m.confusion_normalized[2][1] == 1.0);

    const auto j = metrics_to_json(m, reg);
    CHECK(j["classes"][1]["ap50"].is_null());
    CHECK(j["classes"][0]["ap50"].get<double>() == doctest::Approx(1.0));

    const auto csv = confusion_to_csv(m.confusion, reg);
    CHECK(csv.rfind("gt\\pred,A,B,C,background\n", 0) == 0);
}

TEST_CASE("normalized confusion rows") {
    const auto reg = three_classes();
    std::mt19937_64 rng(77);
    for (int k = 0; k < 500; ++k) {
        const auto images = oracle::random_instance(rng, 3, 4, 3);
        if (oracle::total_gts(images) == 0) continue;
        const auto m = compute_metrics(images, reg, 0.3);
        for (std::size_t r = 0; r < m.confusion.size(); ++r) {
            double raw = 0.0, norm = 0.0;
            for (std::size_t c = 0; c < m.confusion[r].size(); ++c) {
                raw += m.confusion[r][c];
                norm += m.confusion_normalized[r][c];
            }
            if (raw > 0) {
                CHECK(std::abs(norm - 1.0) < 1e-9);
            } else {
                CHECK(norm == 0.0);
            }
        }
        // each ground truth lands in its row exactly once
        for (std::size_t c = 0; c < 3; ++c) {
            double row = 0.0;
            for (double v : m.confusion[c]) row += v;
            CHECK(row == static_cast<double>(m.gt_count[c]));
        }
    }
}

TEST_CASE("parallel metrics match the serial reference exactly") {
    const auto reg = ClassRegistry::vinbigdata();
    std::mt19937_64 rng(99);
    for (int k = 0; k < 40; ++k) {
        const auto images = oracle::random_instance(rng, 25, 12, 14);
        if (oracle::total_gts(images) == 0) continue;
        const auto p = compute_metrics(images, reg, 0.25);
        const auto s = compute_metrics_reference(images, reg, 0.25);
        CHECK(p.per_class_ap50 == s.per_class_ap50);
        CHECK(p.per_class_ap5095 == s.per_class_ap5095);
        CHECK(p.map50 == s.map50);
        CHECK(p.map5095 == s.map5095);
        CHECK(p.precision == s.precision);
        CHECK(p.recall == s.recall);
        CHECK(p.confusion == s.confusion);
        CHECK(p.confusion_normalized == s.confusion_normalized);
        CHECK(metrics_to_json(p, reg) == metrics_to_json(s, reg));
    }
}

TEST_CASE("metrics input validation") {
    const auto reg = three_classes();
    ImageLabels empty{"i", {det(0, {0.5, 0.5, 0.1, 0.1}, 0.5)}, {}};
    CHECK_THROWS_AS(compute_metrics({empty}, reg, 0.25), cxr::ValidationError);
    CHECK_THROWS_AS(compute_metrics_reference({empty}, reg, 0.25), cxr::ValidationError);
    ImageLabels bad{"i", {det(5, {0.5, 0.5, 0.1, 0.1}, 0.5)}, {gt(0, {0.5, 0.5, 0.1, 0.1})}};
    CHECK_THROWS_AS(compute_metrics({bad}, reg, 0.25), cxr::ValidationError);
}

TEST_CASE("patient-wise split") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> n_pat(1, 60), imgs(1, 5);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::map<std::string, std::string> manifest;
        const int np = n_pat(rng);
        for (int p = 0; p < np; ++p) {
            const int ni = imgs(rng);
            for (int i = 0; i < ni; ++i) manifest["p" + std::to_string(p) + "_i" + std::to_string(i)] = "p" + std::to_string(p);
        }
        double r0 = u(rng), r1 = u(rng), r2 = u(rng);
        const double s = r0 + r1 + r2;
        std::array<double, 3> ratios{r0 / s, r1 / s, 0.0};
        ratios[2] = 1.0 - ratios[0] - ratios[1];

        const auto split = split_patientwise(manifest, ratios, static_cast<std::uint64_t>(trial));
        std::set<std::string> seen;
        for (const auto* part : {&split.train, &split.val, &split.test}) {
            for (const auto& p : *part) CHECK(seen.insert(p).second);
        }
        CHECK(seen.size() == static_cast<std::size_t>(np));
        const std::array<std::size_t, 3> sizes{split.train.size(), split.val.size(), split.test.size()};
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(static_cast<double>(sizes[i]) - ratios[i] * np) <= 1.0);
        }
        for (const auto& [image, patient] : manifest) CHECK(split.split_of(patient).has_value());
    }
}

TEST_CASE("split determinism and validation") {
    std::map<std::string, std::string> manifest;
    for (int i = 0; i < 40; ++i) manifest["img" + std::to_string(i)] = "pat" + std::to_string(i / 2);
    const std::array<double, 3> r{0.7, 0.15, 0.15};
    const auto a = split_patientwise(manifest, r, 42), b = split_patientwise(manifest, r, 42);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(a.train.size() == 14);
    CHECK(a.val.size() + a.test.size() == 6);
    const auto c = split_patientwise(manifest, r, 43);
    CHECK((a.train != c.train || a.val != c.val));

    const auto j = split_to_json(a, manifest);
    CHECK(j["images"]["train"].size() == 28);

    CHECK_THROWS_AS(split_patientwise({}, r, 1), cxr::ValidationError);
    CHECK_THROWS_AS(split_patientwise(manifest, {0.5, 0.5, 0.5}, 1), cxr::ValidationError);
    CHECK_THROWS_AS(split_patientwise(manifest, {1.0, 0.0, 0.0}, 1), cxr::ValidationError);
}
