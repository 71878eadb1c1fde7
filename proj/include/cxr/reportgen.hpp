#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cxr/anatomy.hpp"

namespace cxr::reportgen {

using anatomy::StructuredFinding;

enum class PromptStyle { verbose, concise };
enum class ReportSource { ai, human };

std::string_view to_string(PromptStyle s);
std::string_view to_string(ReportSource s);
PromptStyle parse_style(std::string_view s);
ReportSource parse_source(std::string_view s);

/// The sentence appended to concise prompts.
inline constexpr std::string_view kConciseInstruction = "Report only abnormal findings.";

struct RadiologyReport {
    std::string findings_text;
    std::string impression_text;
    ReportSource source = ReportSource::ai;
    std::string report_id;
};

struct GenerationRequest {
    std::string prompt;
    std::optional<std::string> image_ref;
    std::size_t max_length = 4096;  ///< character budget for the generated text
};

/// Findings sorted by descending confidence, ties by class id.
std::vector<StructuredFinding> ordered(std::vector<StructuredFinding> findings);

/// Deterministic prompt asking for a FINDINGS/IMPRESSION report. Each finding
/// is listed as "- <class>, <laterality> <zone>, confidence <0.00>".
std::string build_prompt(const std::vector<StructuredFinding>& findings, PromptStyle style);

/// Locates "FINDINGS" and "IMPRESSION" headers (case-insensitive, at line
/// start, optionally followed by ':'). Throws MissingSectionError or
/// SectionOrderError.
RadiologyReport parse_report(std::string_view text, ReportSource source, std::string report_id = {});

/// Canonical text form; parse_report(render_report(r)) gives back both bodies.
std::string render_report(const RadiologyReport& report);

/// Body text used for similarity: findings, newline, impression.
std::string similarity_text(const RadiologyReport& report);

// ---------------------------------------------------------------------------
// Providers

/// Turns a prompt into report text. Implementations must be safe to call
/// from several threads at once.
class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual std::string complete(const GenerationRequest& request) const = 0;
};

/// Offline template generator. Reads the finding lines back out of a prompt
/// built by build_prompt and fills fixed sentence templates.
class MockGenerationProvider final : public GenerationProvider {
public:
    std::string complete(const GenerationRequest& request) const override;
};

/// Normal-anatomy statements the verbose mock can emit. Concise reports
/// contain none of them.
const std::vector<std::string>& normal_anatomy_sentences();

enum class WireFormat {
    native,       ///< {prompt, image_ref?, max_length} -> {text}
    openai_chat,  ///< chat-completions request -> choices[0].message.content
};

struct HttpProviderConfig {
    std::string base_url;        ///< scheme://host[:port]
    std::string path = "/generate";
    std::string credential_env;  ///< env var holding a bearer token; empty for none
    std::string model_hint;
    WireFormat wire = WireFormat::native;
    int timeout_seconds = 60;

    static HttpProviderConfig from_json(const nlohmann::json& j);
};

class HttpGenerationProvider final : public GenerationProvider {
public:
    explicit HttpGenerationProvider(HttpProviderConfig config);
    std::string complete(const GenerationRequest& request) const override;

    /// Request body for the configured wire format (exposed for tests).
    nlohmann::json request_body(const GenerationRequest& request) const;
    /// Extracts generated text from a response body.
    std::string response_text(const nlohmann::json& body) const;

private:
    HttpProviderConfig config_;
};

/// The reminder appended to a prompt when the first answer failed to parse.
inline constexpr std::string_view kFormatReminder =
    "Format reminder: answer with exactly two sections headed \"FINDINGS:\" and \"IMPRESSION:\".";

/// Completes the request and parses the answer as an AI report. An answer
/// without both sections is retried once with kFormatReminder appended; a
/// second failure throws ReportFormatError carrying the raw text. Answers
/// longer than request.max_length throw ProviderError.
RadiologyReport generate_report(const GenerationRequest& request, const GenerationProvider& provider,
                                std::string report_id = {});

void to_json(nlohmann::json& j, const RadiologyReport& r);

}  // namespace cxr::reportgen
