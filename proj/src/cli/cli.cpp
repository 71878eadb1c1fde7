#include "cxr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "../common/text_util.hpp"
#include "cxr/anatomy.hpp"
#include "cxr/detections.hpp"
#include "cxr/errors.hpp"
#include "cxr/reportgen.hpp"
#include "cxr/service.hpp"
#include "cxr/simeval.hpp"
#include "cxr/survey.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cxr::cli {

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string config;
};

/// Reproducibility record written next to every command's outputs.
class RunManifest {
public:
    RunManifest(std::string command, const std::vector<std::string>& argv, const Globals& g)
        : command_(std::move(command)), argv_(argv), globals_(g) {}

    void input(const fs::path& p) { inputs_.push_back(p.string()); }
    void output(const fs::path& p) { outputs_.push_back(p.string()); }

    void write(const fs::path& dir) const {
        std::vector<std::string> outputs = outputs_;
        std::sort(outputs.begin(), outputs.end());
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
        const json doc = {{"command", command_},
                          {"argv", argv_},
                          {"inputs", inputs_},
                          {"outputs", outputs},
                          {"seed", globals_.seed},
                          {"config", globals_.config.empty() ? json(nullptr) : json(globals_.config)},
                          {"timestamp", stamp}};
        text::write_file(dir / "run_manifest.json", doc.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    Globals globals_;
    std::vector<std::string> inputs_, outputs_;
};

void write_output(RunManifest& manifest, const fs::path& path, std::string_view content) {
    text::write_file(path, content);
    manifest.output(path);
}

detections::ClassRegistry load_registry(const std::string& path) {
    if (path.empty()) return detections::ClassRegistry::vinbigdata();
    return detections::ClassRegistry::parse(text::read_file(path));
}

/// Label files (*.txt) under a directory, or the single file given.
std::vector<fs::path> label_files(const fs::path& input) {
    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        }
    } else if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else {
        throw Error("no such file or directory: " + input.string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Provider settings, either the whole config file or its `section` member.
json provider_section(const Globals& g, const char* section) {
    if (g.config.empty()) throw ValidationError("--config is required for the http provider");
    auto doc = json::parse(text::read_file(g.config));
    if (doc.contains(section)) return doc[section];
    return doc;
}

// ---------------------------------------------------------------------------

int cmd_detect_metrics(const Globals& g, const std::vector<std::string>& argv, const std::string& pred_dir,
                       const std::string& gt_dir, const std::string& classes, double conf, std::ostream& out) {
    RunManifest manifest("detect-metrics", argv, g);
    const auto registry = load_registry(classes);
    if (!classes.empty()) manifest.input(classes);

    std::map<std::string, detections::ImageLabels> by_image;
    for (const auto& f : label_files(gt_dir)) {
        const auto id = f.stem().string();
        by_image[id].image_id = id;
        by_image[id].gts = detections::parse_ground_truth_labels(text::read_file(f), id, registry);
    }
    for (const auto& f : label_files(pred_dir)) {
        const auto id = f.stem().string();
        by_image[id].image_id = id;
        by_image[id].preds = detections::parse_detection_labels(text::read_file(f), id, registry);
    }
    manifest.input(pred_dir);
    manifest.input(gt_dir);
    std::vector<detections::ImageLabels> images;
    for (auto& [id, labels] : by_image) images.push_back(std::move(labels));

    const auto m = detections::compute_metrics(images, registry, conf);
    const fs::path dir = g.out_dir;
    write_output(manifest, dir / "metrics.json", detections::metrics_to_json(m, registry).dump(2) + "\n");
    write_output(manifest, dir / "confusion.csv", detections::confusion_to_csv(m.confusion, registry));
    write_output(manifest, dir / "confusion_normalized.csv",
                 detections::confusion_to_csv(m.confusion_normalized, registry));
    manifest.write(dir);
    out << "images " << images.size() << "  mAP@0.5 " << text::fixed(m.map50, 4) << "  mAP@0.5:0.95 "
        << text::fixed(m.map5095, 4) << "  P " << text::fixed(m.precision, 4) << "  R " << text::fixed(m.recall, 4)
        << '\n';
    return 0;
}

int cmd_annotate(const Globals& g, const std::vector<std::string>& argv, const std::string& input,
                 const std::string& classes, const std::string& orientation, bool anatomy_aware,
                 const std::string& overrides_path, std::ostream& out) {
    RunManifest manifest("annotate", argv, g);
    const auto registry = load_registry(classes);
    const auto convention = anatomy::parse_orientation(orientation);
    auto overrides = anatomy::ZoneOverrides::defaults();
    if (!overrides_path.empty()) {
        overrides = anatomy::ZoneOverrides::parse(text::read_file(overrides_path));
        manifest.input(overrides_path);
    }
    manifest.input(input);

    std::size_t total = 0;
    for (const auto& f : label_files(input)) {
        const auto id = f.stem().string();
        json findings = json::array();
        for (const auto& det : detections::parse_detection_labels(text::read_file(f), id, registry)) {
            findings.push_back(anatomy::to_structured_finding(det, registry, convention, anatomy_aware, overrides));
        }
        total += findings.size();
        write_output(manifest, fs::path(g.out_dir) / (id + ".findings.json"), findings.dump(2) + "\n");
    }
    manifest.write(g.out_dir);
    out << "annotated " << total << " detections\n";
    return 0;
}

int cmd_generate(const Globals& g, const std::vector<std::string>& argv, const std::string& input,
                 const std::string& provider_kind, const std::string& style_name, std::size_t max_length,
                 const std::string& image_ref, std::ostream& out) {
    RunManifest manifest("generate", argv, g);
    const auto style = reportgen::parse_style(style_name);
    std::unique_ptr<reportgen::GenerationProvider> provider;
    if (provider_kind == "mock") {
        provider = std::make_unique<reportgen::MockGenerationProvider>();
    } else if (provider_kind == "http") {
        provider = std::make_unique<reportgen::HttpGenerationProvider>(
            reportgen::HttpProviderConfig::from_json(provider_section(g, "generation")));
    } else {
        throw ValidationError("unknown provider '" + provider_kind + "'");
    }

    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            const auto name = e.path().filename().string();
            if (e.is_regular_file() && name.ends_with(".findings.json")) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(input);
    }
    manifest.input(input);

    for (const auto& f : files) {
        auto name = f.filename().string();
        const std::string stem = name.ends_with(".findings.json") ? name.substr(0, name.size() - 14) : f.stem().string();
        const auto findings = json::parse(text::read_file(f)).get<std::vector<anatomy::StructuredFinding>>();

        reportgen::GenerationRequest req;
        req.prompt = reportgen::build_prompt(findings, style);
        req.max_length = max_length;
        if (!image_ref.empty()) req.image_ref = image_ref;
        const auto report = reportgen::generate_report(req, *provider, stem);

        const fs::path dir = g.out_dir;
        write_output(manifest, dir / (stem + ".prompt.txt"), req.prompt);
        write_output(manifest, dir / (stem + ".report.txt"), reportgen::render_report(report));
        write_output(manifest, dir / (stem + ".report.json"), json(report).dump(2) + "\n");
    }
    manifest.write(g.out_dir);
    out << "generated " << files.size() << " report(s)\n";
    return 0;
}

int cmd_eval_sim(const Globals& g, const std::vector<std::string>& argv, const std::string& pairs_path,
                 const std::string& embedder_kind, std::ostream& out) {
    RunManifest manifest("eval-sim", argv, g);
    manifest.input(pairs_path);
    const auto doc = json::parse(text::read_file(pairs_path));
    const fs::path base = fs::path(pairs_path).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? base / p : fs::path(p); };

    std::vector<simeval::TextPair> pairs;
    for (const auto& e : doc) {
        const auto id = e.at("pair_id").get<std::string>();
        const auto ai = reportgen::parse_report(text::read_file(resolve(e.at("ai_report_path").get<std::string>())),
                                                reportgen::ReportSource::ai, id);
        const auto human = reportgen::parse_report(
            text::read_file(resolve(e.at("human_report_path").get<std::string>())), reportgen::ReportSource::human, id);
        pairs.push_back({id, reportgen::similarity_text(ai), reportgen::similarity_text(human)});
    }
    if (pairs.empty()) throw ValidationError("pair file lists no pairs");
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.pair_id < b.pair_id; });

    std::unique_ptr<simeval::EmbeddingProvider> embedder;
    if (embedder_kind == "mock") {
        auto mock = std::make_unique<simeval::MockEmbedder>();
        for (const auto& p : pairs) {
            mock->fit(p.ai_text);
            mock->fit(p.human_text);
        }
        embedder = std::move(mock);
    } else if (embedder_kind == "http") {
        embedder = std::make_unique<simeval::HttpEmbedder>(
            simeval::HttpEmbedderConfig::from_json(provider_section(g, "embedding")));
    } else {
        throw ValidationError("unknown embedder '" + embedder_kind + "'");
    }

    const auto results = simeval::score_pairs(pairs, *embedder);
    std::vector<double> scores;
    json rows = json::array();
    for (const auto& r : results) {
        scores.push_back(r.score);
        rows.push_back({{"pair_id", r.pair_id}, {"score", r.score}});
    }
    const auto summary = simeval::summarize_scores(scores);
    const fs::path dir = g.out_dir;
    write_output(manifest, dir / "similarity.json",
                 json{{"pairs", rows}, {"summary", simeval::summary_to_json(summary)}}.dump(2) + "\n");
    write_output(manifest, dir / "boxplot.json",
                 json{{"min", summary.min}, {"q1", summary.q1}, {"median", summary.median}, {"q3", summary.q3},
                      {"max", summary.max}}
                         .dump(2) +
                     "\n");
    manifest.write(dir);
    out << "pairs " << summary.n << "  mean " << text::fixed(summary.mean, 4) << " +- " << text::fixed(summary.std, 4)
        << "  median " << text::fixed(summary.median, 4) << '\n';
    return 0;
}

std::map<std::string, std::string> load_patient_manifest(const fs::path& path) {
    const auto content = text::read_file(path);
    std::map<std::string, std::string> out;
    if (path.extension() == ".json") {
        out = json::parse(content).get<std::map<std::string, std::string>>();
        return out;
    }
    std::size_t line_no = 0;
    for (auto line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) throw ParseError(line_no, "expected image_id,patient_id");
        const std::string image(text::trim(line.substr(0, comma)));
        const std::string patient(text::trim(line.substr(comma + 1)));
        if (line_no == 1 && image == "image_id") continue;
        if (image.empty() || patient.empty()) throw ParseError(line_no, "empty image or patient id");
        if (!out.emplace(image, patient).second) throw ParseError(line_no, "duplicate image id '" + image + "'");
    }
    return out;
}

int cmd_split(const Globals& g, const std::vector<std::string>& argv, const std::string& manifest_path,
              const std::vector<double>& ratios, std::ostream& out) {
    RunManifest manifest("split", argv, g);
    manifest.input(manifest_path);
    if (ratios.size() != 3) throw ValidationError("--ratios needs three values");
    const auto images = load_patient_manifest(manifest_path);
    const auto split = detections::split_patientwise(images, {ratios[0], ratios[1], ratios[2]}, g.seed);
    write_output(manifest, fs::path(g.out_dir) / "split.json", detections::split_to_json(split, images).dump(2) + "\n");
    manifest.write(g.out_dir);
    out << "patients train " << split.train.size() << "  val " << split.val.size() << "  test " << split.test.size()
        << '\n';
    return 0;
}

int cmd_survey_aggregate(const Globals& g, const std::vector<std::string>& argv, const std::string& data_dir,
                         const std::string& pool_path, std::ostream& out) {
    RunManifest manifest("survey aggregate", argv, g);
    manifest.input(pool_path);
    manifest.input(fs::path(data_dir) / "responses.jsonl");
    const auto pool = service::load_pool(pool_path);
    const auto log_path = fs::path(data_dir) / "responses.jsonl";
    if (!fs::exists(log_path)) throw Error("no response log at " + log_path.string());
    const survey::ResponseLog log(log_path);
    const auto responses = log.snapshot();
    const auto agg = survey::aggregate_likert(responses, service::truths_of(pool));

    const fs::path dir = g.out_dir;
    write_output(manifest, dir / "table1.json", survey::table1_json(agg).dump(2) + "\n");
    write_output(manifest, dir / "table1.csv", survey::table1_csv(agg));
    write_output(manifest, dir / "table2.json", survey::table2_json(agg).dump(2) + "\n");
    write_output(manifest, dir / "table2.csv", survey::table2_csv(agg));
    manifest.write(dir);
    out << survey::table1_csv(agg);
    return 0;
}

httplib::Server* g_server = nullptr;

extern "C" void stop_server(int) {
    if (g_server) g_server->stop();
}

int cmd_survey_serve(const Globals& g, const std::vector<std::string>& argv, const std::string& host, int port,
                     const std::string& data_dir, const std::string& pool_path, int rotation, std::size_t slots,
                     const std::string& media_dir, const std::string& ui_dir, std::ostream& out) {
    RunManifest manifest("survey serve", argv, g);
    manifest.input(pool_path);

    service::ServiceConfig cfg;
    cfg.data_dir = data_dir;
    cfg.seed = g.seed;
    cfg.rotation_seconds = rotation;
    cfg.slots_per_session = slots;
    if (const char* secret = std::getenv(service::kAdminSecretEnv)) cfg.admin_secret = secret;

    service::SurveyService svc(cfg, service::load_pool(pool_path));
    manifest.write(data_dir);

    httplib::Server server;
    const fs::path media = media_dir.empty() ? fs::path(pool_path).parent_path() : fs::path(media_dir);
    std::optional<fs::path> ui;
    if (!ui_dir.empty()) ui = ui_dir;
    service::mount_routes(server, svc, media, ui);

    if (!server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    out << "serving survey on " << host << ':' << port << " (" << svc.session_count() << " sessions restored)"
        << std::endl;
    server.listen_after_bind();
    g_server = nullptr;
    return 0;
}

int cmd_rerun(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    const auto doc = json::parse(text::read_file(manifest_path));
    const auto args = doc.at("argv").get<std::vector<std::string>>();
    if (!args.empty() && args.front() == "rerun") throw ValidationError("manifest records a rerun");
    return run(args, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Chest X-ray detection-to-report pipeline", "cxr"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every randomized step");
    app.add_option("--out-dir", g.out_dir, "Directory for outputs and the run manifest");
    app.add_option("--config", g.config, "Provider config file (JSON)");

    std::string pred_dir, gt_dir, classes;
    double conf = 0.25;
    auto* detect = app.add_subcommand("detect-metrics", "Detection metrics from label files");
    detect->add_option("--pred-dir", pred_dir, "Prediction label files (class cx cy w h conf)")->required();
    detect->add_option("--gt-dir", gt_dir, "Ground-truth label files (class cx cy w h)")->required();
    detect->add_option("--classes", classes, "Class registry file; defaults to the 14 VinBigData classes");
    detect->add_option("--conf", conf, "Confidence threshold for precision/recall and the confusion matrix")
        ->check(CLI::Range(0.0, 1.0));

    std::string annotate_input, orientation = "image", overrides;
    bool anatomy_aware = false;
    auto* annotate = app.add_subcommand("annotate", "Detections to anatomically phrased findings");
    annotate->add_option("--input", annotate_input, "Detection label file or directory")->required();
    annotate->add_option("--classes", classes, "Class registry file");
    annotate->add_option("--orientation", orientation, "image | viewer")
        ->check(CLI::IsMember({"image", "viewer", "image_naive", "viewer_oriented"}));
    annotate->add_flag("--anatomy-aware", anatomy_aware, "Apply pathology zone overrides");
    annotate->add_option("--overrides", overrides, "Override table (class_name<TAB>zone)");

    std::string findings_input, provider = "mock", style = "verbose", image_ref;
    std::size_t max_length = 4096;
    auto* generate = app.add_subcommand("generate", "Findings to a FINDINGS/IMPRESSION report");
    generate->add_option("--findings", findings_input, "*.findings.json file or directory")->required();
    generate->add_option("--provider", provider, "mock | http")->check(CLI::IsMember({"mock", "http"}));
    generate->add_option("--style", style, "verbose | concise")->check(CLI::IsMember({"verbose", "concise"}));
    generate->add_option("--max-length", max_length, "Character budget for generated text");
    generate->add_option("--image-ref", image_ref, "Image reference for vision-capable providers");

    std::string pairs, embedder = "mock";
    auto* eval = app.add_subcommand("eval-sim", "Cosine similarity of AI vs human reports");
    eval->add_option("--pairs", pairs, "JSON list of {pair_id, ai_report_path, human_report_path}")->required();
    eval->add_option("--embedder", embedder, "mock | http")->check(CLI::IsMember({"mock", "http"}));

    std::string split_manifest;
    std::vector<double> ratios = {0.8, 0.1, 0.1};
    auto* split = app.add_subcommand("split", "Patient-wise train/val/test split");
    split->add_option("--manifest", split_manifest, "CSV image_id,patient_id or JSON {image_id: patient_id}")
        ->required();
    split->add_option("--ratios", ratios, "Three ratios summing to 1")->delimiter(',')->expected(3);

    auto* survey_cmd = app.add_subcommand("survey", "Blind human-evaluation survey");
    survey_cmd->require_subcommand(1);
    std::string data_dir = "survey-data", pool, host = "0.0.0.0", media_dir, ui_dir;
    int port = 8080, rotation = survey::kDefaultRotationSeconds;
    std::size_t slots = 2;
    auto* serve = survey_cmd->add_subcommand("serve", "Run the survey HTTP service");
    serve->add_option("--data-dir", data_dir, "Session index and response log directory");
    serve->add_option("--pool", pool, "Pool manifest (JSON)")->required();
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--rotation-seconds", rotation)->check(CLI::PositiveNumber);
    serve->add_option("--slots", slots, "Pairs per session")->check(CLI::Range(2, 1000));
    serve->add_option("--media-dir", media_dir, "Image directory served under /media");
    serve->add_option("--ui-dir", ui_dir, "Static web UI served at /");
    auto* aggregate = survey_cmd->add_subcommand("aggregate", "Aggregate the response log");
    aggregate->add_option("--data-dir", data_dir, "Directory holding responses.jsonl");
    aggregate->add_option("--pool", pool, "Pool manifest (JSON)")->required();

    std::string rerun_manifest;
    auto* rerun = app.add_subcommand("rerun", "Repeat the command recorded in a run manifest");
    rerun->add_option("--manifest", rerun_manifest)->required();

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("cxr");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*detect) return cmd_detect_metrics(g, args, pred_dir, gt_dir, classes, conf, out);
        if (*annotate) return cmd_annotate(g, args, annotate_input, classes, orientation, anatomy_aware, overrides, out);
        if (*generate) return cmd_generate(g, args, findings_input, provider, style, max_length, image_ref, out);
        if (*eval) return cmd_eval_sim(g, args, pairs, embedder, out);
        if (*split) return cmd_split(g, args, split_manifest, ratios, out);
        if (*serve) {
            return cmd_survey_serve(g, args, host, port, data_dir, pool, rotation, slots, media_dir, ui_dir, out);
        }
        if (*aggregate) return cmd_survey_aggregate(g, args, data_dir, pool, out);
        if (*rerun) return cmd_rerun(rerun_manifest, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace cxr::cli
