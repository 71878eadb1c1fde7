#include "cxr/simeval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>

#include "../common/http_post.hpp"
#include "../common/text_util.hpp"
#include "cxr/errors.hpp"

namespace cxr::simeval {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

void MockEmbedder::fit(std::string_view text) {
    for (auto& t : tokenize(text)) index_.try_emplace(std::move(t), index_.size());
}

void MockEmbedder::fit(std::span<const std::string> corpus) {
    for (const auto& text : corpus) fit(std::string_view(text));
}

EmbeddingVector MockEmbedder::embed(std::string_view text) const {
    if (text::trim(text).empty()) throw ValidationError("cannot embed empty text");
    EmbeddingVector v;
    v.values.assign(index_.size(), 0.0);
    bool any = false;
    for (const auto& t : tokenize(text)) {
        auto it = index_.find(t);
        if (it == index_.end()) continue;
        v.values[it->second] += 1.0;
        any = true;
    }
    if (!any) throw ValidationError("text has no token in the fitted vocabulary");
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v.values) x /= norm;
    return v;
}

HttpEmbedderConfig HttpEmbedderConfig::from_json(const nlohmann::json& j) {
    HttpEmbedderConfig c;
    c.base_url = j.at("base_url").get<std::string>();
    c.path = j.value("path", c.path);
    c.credential_env = j.value("credential_env", std::string{});
    c.model_hint = j.value("model_hint", std::string{});
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    const auto wire = j.value("wire_format", std::string("native"));
    if (wire == "openai") c.openai_wire = true;
    else if (wire != "native") throw ValidationError("unknown wire_format '" + wire + "'");
    return c;
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
    if (text::trim(text).empty()) throw ValidationError("cannot embed empty text");
    nlohmann::json body;
    if (config_.openai_wire) {
        body = {{"input", std::string(text)}};
        if (!config_.model_hint.empty()) body["model"] = config_.model_hint;
    } else {
        body = {{"text", std::string(text)}};
    }
    const auto res = http::post_json({config_.base_url, config_.path, config_.credential_env, config_.timeout_seconds}, body);
    EmbeddingVector v;
    try {
        const auto& values = config_.openai_wire ? res.at("data").at(0).at("embedding") : res.at("values");
        v.values = values.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("unexpected embedding response: ") + e.what(), false);
    }
    if (v.values.empty()) throw ProviderError("provider returned an empty embedding", false);
    return v;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw ContractError("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) throw ContractError("cosine similarity of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

ScoreSummary summarize_scores(std::span<const double> scores) {
    if (scores.empty()) throw ValidationError("cannot summarize an empty score list");
    std::vector<double> x(scores.begin(), scores.end());
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("scores must be finite");
    }
    // Working on the sorted copy makes every field independent of input order.
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();

    double sum = 0.0, comp = 0.0;
    for (double v : x) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    ScoreSummary s;
    s.n = n;
    s.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(n - 1));
        s.std_defined = true;
    }

    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        if (lo + 1 >= n) return x[n - 1];
        const double v = x[lo] + (pos - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
        return std::clamp(v, x[lo], x[lo + 1]);
    };
    s.min = x.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = x.back();
    return s;
}

std::vector<SimilarityResult> score_pairs(std::span<const TextPair> pairs, const EmbeddingProvider& provider) {
    std::vector<SimilarityResult> out(pairs.size());
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
    // exceptions may not cross an OpenMP region boundary
    std::vector<std::exception_ptr> errors(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto a = provider.embed(pairs[k].ai_text);
            const auto b = provider.embed(pairs[k].human_text);
            out[k] = {pairs[k].pair_id, cosine_similarity(a, b)};
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<SimilarityResult> score_pairs_reference(std::span<const TextPair> pairs,
                                                    const EmbeddingProvider& provider) {
    std::vector<SimilarityResult> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.push_back({p.pair_id, cosine_similarity(provider.embed(p.ai_text), provider.embed(p.human_text))});
    }
    return out;
}

nlohmann::json summary_to_json(const ScoreSummary& s) {
    return {{"n", s.n},   {"mean", s.mean},     {"std", s.std},       {"std_defined", s.std_defined},
            {"min", s.min}, {"q1", s.q1},       {"median", s.median}, {"q3", s.q3},
            {"max", s.max}};
}

}  // namespace cxr::simeval
