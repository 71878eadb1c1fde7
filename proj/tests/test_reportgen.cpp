#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <random>

#include "cxr/errors.hpp"
#include "cxr/reportgen.hpp"
#include "stub_server.hpp"

using namespace cxr::reportgen;
using cxr::anatomy::Laterality;
using cxr::anatomy::VerticalZone;

namespace {

std::vector<StructuredFinding> random_findings(std::mt19937_64& rng) {
    static const auto names = cxr::detections::ClassRegistry::vinbigdata().names();
    std::uniform_int_distribution<int> count(0, 6), cls(0, static_cast<int>(names.size()) - 1), lat(0, 2), zone(0, 3);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    std::vector<StructuredFinding> out;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        StructuredFinding f;
        f.class_id = cls(rng);
        f.class_name = names[static_cast<std::size_t>(f.class_id)];
        f.laterality = static_cast<Laterality>(lat(rng));
        f.vertical_zone = static_cast<VerticalZone>(zone(rng));
        f.confidence = conf(rng);
        out.push_back(f);
    }
    return out;
}

// Splits the canonical two-section text by hand.
std::pair<std::string, std::string> sections_of(const std::string& text) {
    const std::string head = "FINDINGS:\n", mid = "\n\nIMPRESSION:\n";
    const auto m = text.find(mid);
    REQUIRE(text.rfind(head, 0) == 0);
    REQUIRE(m != std::string::npos);
    std::string impression = text.substr(m + mid.size());
    while (!impression.empty() && impression.back() == '\n') impression.pop_back();
    return {text.substr(head.size(), m - head.size()), impression};
}

class ScriptedProvider final : public GenerationProvider {
public:
    explicit ScriptedProvider(std::vector<std::string> answers) : answers_(std::move(answers)) {}
    std::string complete(const GenerationRequest& request) const override {
        prompts.push_back(request.prompt);
        return answers_.at(std::min(prompts.size() - 1, answers_.size() - 1));
    }
    mutable std::vector<std::string> prompts;

private:
    std::vector<std::string> answers_;
};

StructuredFinding finding(std::string name, int id, Laterality l, VerticalZone z, double c) {
    return {std::move(name), id, l, z, c, {}};
}

}  // namespace

TEST_CASE("prompt layout") {
    const std::vector<StructuredFinding> fs{
        finding("Nodule/Mass", 8, Laterality::right, VerticalZone::upper, 0.42),
        finding("Cardiomegaly", 3, Laterality::midline, VerticalZone::lower, 0.87),
        finding("Aortic enlargement", 0, Laterality::midline, VerticalZone::upper, 0.87),
    };
    const auto verbose = build_prompt(fs, PromptStyle::verbose);
    const auto a = verbose.find("- Aortic enlargement, midline upper, confidence 0.87");
    const auto b = verbose.find("- Cardiomegaly, midline lower, confidence 0.87");
    const auto c = verbose.find("- Nodule/Mass, right upper, confidence 0.42");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    REQUIRE(c != std::string::npos);
    CHECK(a < b);
    CHECK(b < c);
    CHECK(verbose.find(kConciseInstruction) == std::string::npos);

    const auto concise = build_prompt(fs, PromptStyle::concise);
    CHECK(concise.find("Report only abnormal findings.") != std::string::npos);
    CHECK(build_prompt({}, PromptStyle::verbose).find("No abnormalities detected.") != std::string::npos);
    CHECK(build_prompt(fs, PromptStyle::concise) == concise);
}

TEST_CASE("report parsing") {
    SUBCASE("canonical") {
        const auto r = parse_report("FINDINGS:\nHeart is large.\nLungs clear.\n\nIMPRESSION:\n1. Cardiomegaly.\n",
                                    ReportSource::human, "r1");
        CHECK(r.findings_text == "Heart is large.\nLungs clear.");
        CHECK(r.impression_text == "1. Cardiomegaly.");
        CHECK(r.source == ReportSource::human);
        CHECK(r.report_id == "r1");
    }
    SUBCASE("inline bodies, case and markdown") {
        const auto r = parse_report("Preamble\n**Findings:** small effusion.\n## impression\nEffusion.", ReportSource::ai);
        CHECK(r.findings_text == "small effusion.");
        CHECK(r.impression_text == "Effusion.");
    }
    SUBCASE("words starting with a header are not headers") {
        const auto r = parse_report("FINDINGS:\nFindingsless text.\nIMPRESSION:\nok", ReportSource::ai);
        CHECK(r.findings_text == "Findingsless text.");
    }
    SUBCASE("errors") {
        try {
            parse_report("FINDINGS:\nsomething\n", ReportSource::ai);
            FAIL("expected MissingSectionError");
        } catch (const cxr::MissingSectionError& e) {
            CHECK(e.section() == "IMPRESSION");
        }
        CHECK_THROWS_AS(parse_report("IMPRESSION:\na\nFINDINGS:\nb\n", ReportSource::ai), cxr::SectionOrderError);
        CHECK_THROWS_AS(parse_report("FINDINGS:\n\nIMPRESSION:\nb\n", ReportSource::ai), cxr::MissingSectionError);
        CHECK_THROWS_AS(parse_report("no structure at all", ReportSource::ai), cxr::ReportFormatError);
    }
}

TEST_CASE("render and parse round trip") {
    const RadiologyReport r{"Line one.\nLine two.", "1. Thing.\n2. Other.", ReportSource::ai, "x"};
    const auto back = parse_report(render_report(r), ReportSource::ai, "x");
    CHECK(back.findings_text == r.findings_text);
    CHECK(back.impression_text == r.impression_text);
    CHECK(similarity_text(r) == "Line one.\nLine two.\n1. Thing.\n2. Other.");
}

TEST_CASE("mock generation round trip on random finding sets") {
    std::mt19937_64 rng(8);
    const MockGenerationProvider mock;
    for (int k = 0; k < 200; ++k) {
        const auto fs = random_findings(rng);
        const auto style = k % 2 ? PromptStyle::concise : PromptStyle::verbose;
        const GenerationRequest req{build_prompt(fs, style), std::nullopt, 4096};
        const std::string raw = mock.complete(req);
        const auto [findings, impression] = sections_of(raw);
        const auto report = generate_report(req, mock, "r" + std::to_string(k));
        CHECK(report.findings_text == findings);
        CHECK(report.impression_text == impression);
        CHECK(report.source == ReportSource::ai);
        const auto again = parse_report(render_report(report), ReportSource::ai);
        CHECK(again.findings_text == report.findings_text);
        CHECK(again.impression_text == report.impression_text);

        // one numbered impression line per finding
        if (!fs.empty()) {
            CHECK(impression.rfind("1. ", 0) == 0);
            CHECK(impression.find(std::to_string(fs.size()) + ". ") != std::string::npos);
        }
        if (style == PromptStyle::concise) {
            CHECK(req.prompt.find("Report only abnormal findings.") != std::string::npos);
            for (const auto& s : normal_anatomy_sentences()) CHECK(raw.find(s) == std::string::npos);
        }
    }
}

TEST_CASE("verbose mock describes normal anatomy") {
    const MockGenerationProvider mock;
    const auto empty = mock.complete({build_prompt({}, PromptStyle::verbose), std::nullopt, 4096});
    CHECK(empty.find("The lungs are clear.") != std::string::npos);
    const auto concise_empty = mock.complete({build_prompt({}, PromptStyle::concise), std::nullopt, 4096});
    CHECK(concise_empty.find("No abnormal findings.") != std::string::npos);

    const auto one = mock.complete(
        {build_prompt({finding("Pleural effusion", 10, Laterality::right, VerticalZone::basal, 0.9)}, PromptStyle::verbose),
         std::nullopt, 4096});
    CHECK(one.find("Heart size is normal.") != std::string::npos);
    CHECK(one.find("There is a pleural effusion in the right basal lung field.") != std::string::npos);
    CHECK(one.find("The left lung is clear.") != std::string::npos);
    CHECK(one.find("1. Pleural effusion in the right basal lung field.") != std::string::npos);
}

TEST_CASE("generate_report retry and budget") {
    const GenerationRequest req{"prompt", std::nullopt, 4096};
    SUBCASE("second attempt succeeds") {
        ScriptedProvider p({"garbage", "FINDINGS: a\nIMPRESSION: b"});
        const auto r = generate_report(req, p);
        CHECK(r.findings_text == "a");
        REQUIRE(p.prompts.size() == 2);
        CHECK(p.prompts[1] == std::string("prompt\n") + std::string(kFormatReminder));
    }
    SUBCASE("second failure keeps the raw text") {
        ScriptedProvider p({"garbage", "still garbage"});
        try {
            generate_report(req, p);
            FAIL("expected ReportFormatError");
        } catch (const cxr::ReportFormatError& e) {
            CHECK(e.raw_text() == "still garbage");
        }
        CHECK(p.prompts.size() == 2);
    }
    SUBCASE("over budget") {
        ScriptedProvider p({"FINDINGS: " + std::string(100, 'x') + "\nIMPRESSION: y"});
        try {
            generate_report({"prompt", std::nullopt, 50}, p);
            FAIL("expected ProviderError");
        } catch (const cxr::ProviderError& e) {
            CHECK_FALSE(e.retryable());
        }
    }
    SUBCASE("empty prompt") {
        ScriptedProvider p({"x"});
        CHECK_THROWS_AS(generate_report({"", std::nullopt, 10}, p), cxr::ContractError);
    }
}

TEST_CASE("http provider wire formats") {
    testing_support::StubServer stub;
    std::atomic<int> calls{0};
    std::string seen_auth;
    nlohmann::json seen_body;
    stub.server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        res.set_content(nlohmann::json{{"text", "FINDINGS:\nok\n\nIMPRESSION:\nfine\n"}}.dump(), "application/json");
    });
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        const nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "FINDINGS: a\nIMPRESSION: b"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    stub.server.Post("/busy", [](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
    });
    stub.server.Post("/html", [](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
    stub.start();

    ::setenv("CXR_TEST_TOKEN", "sekret", 1);
    SUBCASE("native") {
        const auto cfg = HttpProviderConfig::from_json(
            {{"base_url", stub.base_url()}, {"credential_env", "CXR_TEST_TOKEN"}, {"wire_format", "native"}});
        const HttpGenerationProvider p(cfg);
        const auto r = generate_report({"the prompt", std::string("img.png"), 1000}, p);
        CHECK(r.impression_text == "fine");
        CHECK(seen_auth == "Bearer sekret");
        CHECK(seen_body["prompt"] == "the prompt");
        CHECK(seen_body["image_ref"] == "img.png");
        CHECK(seen_body["max_length"] == 1000);
        CHECK(calls == 1);
    }
    SUBCASE("openai chat") {
        HttpProviderConfig cfg;
        cfg.base_url = stub.base_url();
        cfg.path = "/v1/chat/completions";
        cfg.wire = WireFormat::openai_chat;
        cfg.model_hint = "some-model";
        const HttpGenerationProvider p(cfg);
        const auto r = generate_report({"hello", std::nullopt, 1000}, p);
        CHECK(r.findings_text == "a");
        CHECK(seen_body["model"] == "some-model");
        CHECK(seen_body["messages"][0]["content"] == "hello");
    }
    SUBCASE("errors") {
        HttpProviderConfig cfg;
        cfg.base_url = stub.base_url();
        cfg.path = "/busy";
        try {
            HttpGenerationProvider(cfg).complete({"p", std::nullopt, 10});
            FAIL("expected ProviderError");
        } catch (const cxr::ProviderError& e) {
            CHECK(e.retryable());
        }
        cfg.path = "/html";
        try {
            HttpGenerationProvider(cfg).complete({"p", std::nullopt, 10});
            FAIL("expected ProviderError");
        } catch (const cxr::ProviderError& e) {
            CHECK_FALSE(e.retryable());
        }
        cfg.path = "/generate";
        cfg.credential_env = "CXR_TEST_TOKEN_UNSET";
        ::unsetenv("CXR_TEST_TOKEN_UNSET");
        try {
            HttpGenerationProvider(cfg).complete({"p", std::nullopt, 10});
            FAIL("expected ProviderError");
        } catch (const cxr::ProviderError& e) {
            CHECK_FALSE(e.retryable());
        }
        CHECK(calls == 0);
        CHECK_THROWS_AS(HttpProviderConfig::from_json({{"base_url", "x"}, {"wire_format", "smoke"}}), cxr::ValidationError);
    }
}
