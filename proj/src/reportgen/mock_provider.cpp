#include <regex>

#include "../common/text_util.hpp"
#include "cxr/reportgen.hpp"

namespace cxr::reportgen {

namespace {

struct PromptFinding {
    std::string class_name;
    std::string laterality;
    std::string zone;
};

std::vector<PromptFinding> findings_in_prompt(std::string_view prompt) {
    static const std::regex line_re(R"(^- (.+), (left|right|midline) (upper|middle|lower|basal), confidence [0-9.]+$)");
    std::vector<PromptFinding> out;
    for (auto line : text::split_lines(prompt)) {
        std::smatch m;
        const std::string s(line);
        if (std::regex_match(s, m, line_re)) out.push_back({m[1], m[2], m[3]});
    }
    return out;
}

const std::string kHeartNormal = "Heart size is normal.";
const std::string kMediastinumNormal = "The mediastinal contour is normal.";
const std::string kRightLungClear = "The right lung is clear.";
const std::string kLeftLungClear = "The left lung is clear.";
const std::string kHeartAndMediastinumNormal = "Heart size and mediastinal contour are normal.";
const std::string kVascularityNormal = "Pulmonary vascularity is normal.";
const std::string kLungsClear = "The lungs are clear.";
const std::string kNoEffusion = "No pleural effusion or pneumothorax.";

}  // namespace

const std::vector<std::string>& normal_anatomy_sentences() {
    static const std::vector<std::string> all = {
        kHeartNormal,  kMediastinumNormal, kRightLungClear, kLeftLungClear,
        kHeartAndMediastinumNormal, kVascularityNormal, kLungsClear, kNoEffusion,
    };
    return all;
}

std::string MockGenerationProvider::complete(const GenerationRequest& request) const {
    const bool concise = request.prompt.find(kConciseInstruction) != std::string::npos;
    const auto findings = findings_in_prompt(request.prompt);

    std::vector<std::string> sentences;
    std::vector<std::string> impression;

    if (findings.empty()) {
        if (concise) {
            sentences.push_back("No abnormal findings.");
        } else {
            sentences = {kHeartAndMediastinumNormal, kVascularityNormal, kLungsClear, kNoEffusion};
        }
        impression.push_back("No acute abnormality.");
    } else {
        bool cardiac = false, aortic = false, left = false, right = false;
        for (const auto& f : findings) {
            cardiac |= f.class_name == "Cardiomegaly";
            aortic |= f.class_name == "Aortic enlargement";
            left |= f.laterality == "left";
            right |= f.laterality == "right";
        }
        if (!concise) {
            if (!cardiac) sentences.push_back(kHeartNormal);
            if (!aortic) sentences.push_back(kMediastinumNormal);
        }
        for (std::size_t i = 0; i < findings.size(); ++i) {
            const auto& f = findings[i];
            const std::string where = f.laterality + " " + f.zone + " lung field";
            sentences.push_back("There is a " + text::to_lower(f.class_name) + " in the " + where + ".");
            impression.push_back(std::to_string(i + 1) + ". " + f.class_name + " in the " + where + ".");
        }
        if (!concise && left != right) sentences.push_back(left ? kRightLungClear : kLeftLungClear);
    }

    std::string out = "FINDINGS:\n";
    for (std::size_t i = 0; i < sentences.size(); ++i) out += (i ? " " : "") + sentences[i];
    out += "\n\nIMPRESSION:\n";
    for (std::size_t i = 0; i < impression.size(); ++i) out += (i ? "\n" : "") + impression[i];
    out += "\n";
    return out;
}

}  // namespace cxr::reportgen
