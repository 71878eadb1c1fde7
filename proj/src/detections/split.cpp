#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cxr/detections.hpp"
#include "cxr/errors.hpp"
#include "cxr/random.hpp"

namespace cxr::detections {

std::optional<std::string> DatasetSplit::split_of(const std::string& patient_id) const {
    auto has = [&](const std::vector<std::string>& v) { return std::binary_search(v.begin(), v.end(), patient_id); };
    if (has(train)) return "train";
    if (has(val)) return "val";
    if (has(test)) return "test";
    return std::nullopt;
}

DatasetSplit split_patientwise(const std::map<std::string, std::string>& patient_of_image,
                               const std::array<double, 3>& ratios, std::uint64_t seed) {
    if (patient_of_image.empty()) throw ValidationError("cannot split an empty manifest");
    double total = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("split ratios must be positive");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");

    std::set<std::string> unique;
    for (const auto& [image, patient] : patient_of_image) unique.insert(patient);
    std::vector<std::string> patients(unique.begin(), unique.end());
    SeededRng rng(seed);
    shuffle(std::span<std::string>(patients), rng);

    // largest remainder: floor every quota, hand leftovers to the biggest fractions
    const auto n = static_cast<double>(patients.size());
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double quota = ratios[i] * n;
        sizes[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
        remainder[i] = quota - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<std::size_t, 3> by_remainder{0, 1, 2};
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < patients.size(); ++k, ++assigned) ++sizes[by_remainder[k % 3]];

    DatasetSplit split;
    split.ratios = ratios;
    auto first = patients.begin();
    split.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
    first += static_cast<std::ptrdiff_t>(sizes[0]);
    split.val.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
    first += static_cast<std::ptrdiff_t>(sizes[1]);
    split.test.assign(first, patients.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

nlohmann::json split_to_json(const DatasetSplit& split, const std::map<std::string, std::string>& patient_of_image) {
    nlohmann::json j;
    j["ratios"] = split.ratios;
    j["patients"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
    nlohmann::json images = {{"train", nlohmann::json::array()},
                             {"val", nlohmann::json::array()},
                             {"test", nlohmann::json::array()}};
    for (const auto& [image, patient] : patient_of_image) {
        if (auto s = split.split_of(patient)) images[*s].push_back(image);
    }
    j["images"] = std::move(images);
    return j;
}

}  // namespace cxr::detections
